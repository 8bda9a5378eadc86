"""HTTP JSON API: the surface the browse UI and other programs drive.

Every response is a pure function of (dataset version, request): repeated
identical requests return byte-identical bodies, and the dataset version
rides along in an entity tag for cache validation. Validation problems map
to 400, missing things to 404, upstream source failures to 502; bodies
always carry the machine error code.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .augment import AugmentationStep
from .engine import FilterState, facet_counts, zero_result_guard
from .errors import FacetBrowseError, NotFoundError, UpstreamError
from .ingest import DelimitedOptions
from .oai import HarvestConfig
from .store import DatasetStore, SchemaChange
from .views import ViewConfig, WidgetKind, build_view
from .wire import (
    api_error_json,
    decode_state,
    export_csv,
    export_json,
    state_json,
    view_result_json,
)

__all__ = ["create_app", "query_payload", "embed_payload", "dataset_descriptor"]


def _status_for(exc: FacetBrowseError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, UpstreamError):
        return 502
    return 400


def _json_bytes(payload: Any) -> bytes:
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode()


def _respond(payload: Any, status: int = 200, etag: str | None = None) -> Response:
    headers = {}
    if etag is not None:
        headers["ETag"] = f'"{etag}"'
    return Response(
        content=_json_bytes(payload),
        status_code=status,
        media_type="application/json",
        headers=headers,
    )


def dataset_descriptor(store: DatasetStore, dataset_id: str) -> dict:
    entry = store.dataset(dataset_id)
    snapshot = entry.snapshot
    return {
        "dataset_id": snapshot.dataset_id,
        "name": entry.name,
        "version": snapshot.version,
        "record_count": len(snapshot.records),
        "source": {"type": snapshot.source.get("type")},
        "schema": [
            {
                "name": f.name,
                "ftype": f.ftype.value,
                "enabled": f.enabled,
                "multivalued": f.multivalued,
            }
            for f in snapshot.schema
        ],
        "steps_recorded": len(entry.steps),
    }


def _report_json(report) -> dict:
    return {
        "rows_read": report.rows_read,
        "records_created": report.records_created,
        "rows_skipped": report.rows_skipped,
        "warnings": [{"locator": loc, "message": msg} for loc, msg in report.warnings],
    }


def _widget_payload(store: DatasetStore, config: ViewConfig, state: FilterState) -> list:
    """Per-widget data under the live state, including null-set projections.

    Filter lists and tag clouds report, for every bucket, the count with the
    widget facet's own selections removed plus the projected result size if
    that bucket were toggled; the UI greys out projected-zero choices.
    """
    entry = store.dataset(config.dataset_id)
    index = entry.index
    out = []
    for widget in config.widgets:
        item: dict[str, Any] = {"kind": widget.kind.value}
        if widget.kind is WidgetKind.SEARCH_BOX:
            item["query"] = state.text_query
        elif widget.kind is WidgetKind.LOGO:
            item["url"] = widget.url
        elif widget.field is not None:
            counts = facet_counts(index, state, widget.field)
            buckets = []
            max_count = max((n for _, n in counts.buckets), default=0)
            for key, count in counts.buckets:
                bucket: dict[str, Any] = {
                    "key": key,
                    "count": count,
                    "projected": zero_result_guard(index, state, (widget.field, key)),
                    "selected": state.is_selected(widget.field, key),
                }
                if widget.kind is WidgetKind.TAG_CLOUD and max_count:
                    bucket["weight"] = count / max_count
                buckets.append(bucket)
            item["field"] = widget.field
            item["buckets"] = buckets
        out.append(item)
    return out


def query_payload(
    store: DatasetStore,
    view_id: str,
    state: FilterState,
    offset: int = 0,
    limit: int = 50,
) -> dict:
    config = store.view(view_id)
    entry = store.dataset(config.dataset_id)
    result = build_view(
        config,
        entry.snapshot,
        state,
        index=entry.index,
        geo_tree=store.geo_tree,
        offset=offset,
        limit=limit,
    )
    return {
        "view_id": view_id,
        "version": entry.snapshot.version,
        "state": state_json(state),
        "result": view_result_json(result),
        "widgets": _widget_payload(store, config, state),
    }


def embed_payload(store: DatasetStore, view_id: str, query_url: str) -> dict:
    """Self-sufficient first-paint payload: config, schema, initial result."""
    config = store.view(view_id)
    entry = store.dataset(config.dataset_id)
    widget_fields = {w.field for w in config.widgets if w.field}
    widget_fields.update(f for f in (config.facet_field, config.weight_field) if f)
    return {
        "view": config.to_json(),
        "version": entry.snapshot.version,
        "query_url": query_url,
        "schema": [
            {"name": f.name, "ftype": f.ftype.value, "multivalued": f.multivalued}
            for f in entry.snapshot.schema
            if f.enabled and f.name in widget_fields
        ],
        "initial": query_payload(store, view_id, FilterState()),
    }


def create_app(store: DatasetStore, ui_dir: "Path | str | None" = None) -> FastAPI:
    app = FastAPI(title="facetbrowse", docs_url=None, redoc_url=None)
    app.state.store = store
    # open read surface; the browse UI may be served from another origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(FacetBrowseError)
    async def engine_error(request: Request, exc: FacetBrowseError):
        return JSONResponse(
            status_code=_status_for(exc), content=api_error_json(exc)
        )

    def _etag(dataset_id: str) -> str:
        return f"{dataset_id}-v{store.dataset(dataset_id).snapshot.version}"

    # -- datasets -----------------------------------------------------------

    @app.post("/datasets", status_code=201)
    async def create_dataset(request: Request):
        content_type = request.headers.get("content-type", "")
        params = request.query_params
        dataset_id = params.get("id")
        name = params.get("name", "")
        body = await request.body()
        if content_type.startswith("application/json"):
            doc = _parse_json_body(body)
            entry, report = _create_from_document(store, doc, dataset_id, name)
        else:
            options = DelimitedOptions(
                delimiter=params.get("delimiter", ","),
                header_row=params.get("header_row", "true") != "false",
                id_column=params.get("id_column"),
            )
            entry, report = store.create_from_delimited(
                body, options, dataset_id=dataset_id, name=name
            )
        return _respond(
            {
                "dataset_id": entry.snapshot.dataset_id,
                "version": entry.snapshot.version,
                "report": _report_json(report),
            },
            status=201,
            etag=f"{entry.snapshot.dataset_id}-v{entry.snapshot.version}",
        )

    @app.get("/datasets/{dataset_id}")
    async def get_dataset(dataset_id: str):
        return _respond(dataset_descriptor(store, dataset_id), etag=_etag(dataset_id))

    @app.post("/datasets/{dataset_id}/harvest")
    async def harvest_dataset(dataset_id: str, request: Request):
        # (Re-)runs the dataset's harvest; a body may supply a new config.
        entry = store.dataset(dataset_id)
        body = await request.body()
        if body:
            doc = _parse_json_body(body)
            config = _harvest_config(doc)
            with entry.lock:
                entry.snapshot = entry.snapshot.with_(
                    source={
                        "type": "oai",
                        "base_url": config.base_url,
                        "metadata_prefix": config.metadata_prefix,
                        "set_spec": config.set_spec,
                        "field_map": dict(config.field_map),
                    }
                )
        snapshot, diff, report = store.refresh(dataset_id)
        return _respond(
            {
                "dataset_id": dataset_id,
                "version": snapshot.version,
                "diff": _diff_json(diff),
                "report": _report_json(report),
            },
            etag=f"{dataset_id}-v{snapshot.version}",
        )

    @app.patch("/datasets/{dataset_id}/schema")
    async def patch_schema(dataset_id: str, request: Request):
        doc = _parse_json_body(await request.body())
        changes = []
        for raw in doc.get("fields", []):
            try:
                changes.append(SchemaChange.from_json(raw))
            except (KeyError, ValueError) as exc:
                raise FacetBrowseError(f"bad schema change: {exc}") from None
        snapshot, warnings = store.patch_schema(dataset_id, changes)
        return _respond(
            {
                "dataset_id": dataset_id,
                "version": snapshot.version,
                "warnings": [
                    {"locator": loc, "message": msg} for loc, msg in warnings
                ],
            },
            etag=f"{dataset_id}-v{snapshot.version}",
        )

    @app.post("/datasets/{dataset_id}/augment")
    async def augment_dataset(dataset_id: str, request: Request):
        doc = _parse_json_body(await request.body())
        try:
            steps = [AugmentationStep.from_json(s) for s in doc.get("steps", [])]
        except (KeyError, ValueError) as exc:
            raise FacetBrowseError(f"bad augmentation step: {exc}") from None
        snapshot, report = store.augment(dataset_id, steps)
        return _respond(
            {
                "dataset_id": dataset_id,
                "version": snapshot.version,
                "steps": report.steps,
                "warnings": [
                    {"locator": loc, "message": msg} for loc, msg in report.warnings
                ],
            },
            etag=f"{dataset_id}-v{snapshot.version}",
        )

    @app.post("/datasets/{dataset_id}/refresh")
    async def refresh_dataset(dataset_id: str, request: Request):
        body = await request.body()
        snapshot, diff, report = store.refresh(dataset_id, body or None)
        return _respond(
            {
                "dataset_id": dataset_id,
                "version": snapshot.version,
                "diff": _diff_json(diff),
                "report": _report_json(report),
            },
            etag=f"{dataset_id}-v{snapshot.version}",
        )

    @app.get("/datasets/{dataset_id}/export")
    async def export_dataset(dataset_id: str, request: Request):
        entry = store.dataset(dataset_id)
        fmt = request.query_params.get("format", "csv")
        state = decode_state(request.query_params.multi_items())
        if fmt == "csv":
            data = export_csv(entry.snapshot, entry.index, state)
            media = "text/csv; charset=utf-8"
        elif fmt == "json":
            data = export_json(entry.snapshot, entry.index, state)
            media = "application/json"
        else:
            raise FacetBrowseError(f"unknown export format {fmt!r}")
        return Response(
            content=data,
            media_type=media,
            headers={"ETag": f'"{_etag(dataset_id)}"'},
        )

    # -- views --------------------------------------------------------------

    @app.post("/datasets/{dataset_id}/views", status_code=201)
    async def add_view(dataset_id: str, request: Request):
        doc = _parse_json_body(await request.body())
        doc.setdefault("dataset_id", dataset_id)
        doc.setdefault("view_id", store._new_id("vw"))
        if doc["dataset_id"] != dataset_id:
            raise FacetBrowseError("body dataset_id does not match the URL")
        try:
            config = ViewConfig.from_json(doc)
        except (KeyError, ValueError) as exc:
            raise FacetBrowseError(f"bad view config: {exc}") from None
        store.add_view(config)
        return _respond(config.to_json(), status=201)

    @app.get("/views/{view_id}")
    async def get_view(view_id: str):
        config = store.view(view_id)
        return _respond(config.to_json(), etag=_etag(config.dataset_id))

    @app.get("/views/{view_id}/query")
    async def query_view(view_id: str, request: Request):
        config = store.view(view_id)
        state = decode_state(request.query_params.multi_items())
        offset = _int_param(request, "offset", 0)
        limit = _int_param(request, "limit", 50)
        payload = query_payload(store, view_id, state, offset=offset, limit=limit)
        return _respond(payload, etag=_etag(config.dataset_id))

    @app.get("/views/{view_id}/embed")
    async def embed_view(view_id: str):
        config = store.view(view_id)
        payload = embed_payload(store, view_id, f"/views/{view_id}/query")
        return _respond(payload, etag=_etag(config.dataset_id))

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _int_param(request: Request, name: str, default: int) -> int:
    raw = request.query_params.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise FacetBrowseError(f"{name} must be an integer, got {raw!r}") from None


def _parse_json_body(body: bytes) -> dict:
    try:
        doc = json.loads(body or b"null")
    except json.JSONDecodeError as exc:
        raise FacetBrowseError(f"request body is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FacetBrowseError("request body must be a JSON object")
    return doc


def _harvest_config(doc: dict) -> HarvestConfig:
    try:
        return HarvestConfig(
            base_url=doc["base_url"],
            metadata_prefix=doc.get("metadata_prefix", "oai_dc"),
            set_spec=doc.get("set_spec"),
            field_map=dict(doc.get("field_map") or {}),
        )
    except (KeyError, ValueError) as exc:
        raise FacetBrowseError(f"bad harvest config: {exc}") from None


def _diff_json(diff) -> dict:
    return {
        "added": sorted(diff.added),
        "removed": sorted(diff.removed),
        "modified": sorted(diff.modified),
    }


def _create_from_document(
    store: DatasetStore, doc: dict, dataset_id: str | None, name: str
):
    if "harvest" in doc:
        return store.create_from_harvest(
            _harvest_config(doc["harvest"]), dataset_id=dataset_id, name=name
        )
    if "records" in doc:
        return store.create_from_record_list(
            json.dumps(doc["records"]).encode(), dataset_id=dataset_id, name=name
        )
    if "delimited" in doc:
        spec = doc["delimited"]
        options = DelimitedOptions(
            delimiter=spec.get("delimiter", ","),
            header_row=spec.get("header_row", True),
            id_column=spec.get("id_column"),
        )
        return store.create_from_delimited(
            str(spec.get("content", "")).encode(),
            options,
            dataset_id=dataset_id,
            name=name,
        )
    raise FacetBrowseError(
        "body must contain one of 'delimited', 'records', or 'harvest'"
    )
