"""Command-line front end: thin shells over the store and view operations.

Exit codes: 0 on success, 1 on validation errors, 2 on I/O or network
errors. Datasets persist under the data directory, so separate invocations
compose (ingest, then augment, then snapshot or serve).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .augment import AugmentationStep, StepKind, builtin_gazetteer, load_gazetteer
from .engine import FilterState
from .errors import FacetBrowseError, UpstreamError
from .geo import builtin_geo_tree, load_geo_tree
from .ingest import DelimitedOptions
from .oai import HarvestConfig
from .store import DatasetStore
from .views import ViewConfig, ViewKind, Widget, WidgetKind, build_view
from .wire import export_csv, export_json, view_result_json

DEFAULT_DATA_DIR = "facetbrowse_data"


def _fail(exc: Exception) -> None:
    if isinstance(exc, UpstreamError):
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(2)
    if isinstance(exc, FacetBrowseError):
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(1)
    if isinstance(exc, OSError):
        click.echo(f"IOError: {exc}", err=True)
        sys.exit(2)
    raise exc


class Settings:
    def __init__(self, config: str | None, data_dir: str | None,
                 gazetteer: str | None, geo_tree: str | None, port: int | None):
        file_conf: dict = {}
        if config:
            file_conf = json.loads(Path(config).read_text(encoding="utf-8"))
        self.data_dir = Path(data_dir or file_conf.get("data_dir", DEFAULT_DATA_DIR))
        self.gazetteer_path = gazetteer or file_conf.get("gazetteer")
        self.geo_tree_path = geo_tree or file_conf.get("geo_tree")
        self.port = port or int(file_conf.get("port", 8400))

    def open_store(self) -> DatasetStore:
        gazetteer = (
            load_gazetteer(Path(self.gazetteer_path))
            if self.gazetteer_path
            else builtin_gazetteer()
        )
        tree = (
            load_geo_tree(Path(self.geo_tree_path))
            if self.geo_tree_path
            else builtin_geo_tree()
        )
        return DatasetStore(self.data_dir, gazetteer=gazetteer, geo_tree=tree)


@click.group()
@click.option("--config", type=click.Path(exists=True), help="JSON config file.")
@click.option("--data-dir", type=click.Path(), help="Dataset storage directory.")
@click.option("--gazetteer", type=click.Path(exists=True), help="Gazetteer TSV file.")
@click.option("--geo-tree", type=click.Path(exists=True), help="Geo hierarchy outline file.")
@click.option("--port", type=int, help="Port for the serve command.")
@click.pass_context
def main(ctx, config, data_dir, gazetteer, geo_tree, port):
    """Faceted browse engine for digital collections."""
    try:
        ctx.obj = Settings(config, data_dir, gazetteer, geo_tree, port)
    except Exception as exc:  # noqa: BLE001 - config problems are user errors
        _fail(exc)


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--id", "dataset_id", help="Dataset id (default: derived from filename).")
@click.option("--name", default="", help="Human-readable dataset name.")
@click.option("--format", "fmt", type=click.Choice(["auto", "csv", "records"]), default="auto")
@click.option("--delimiter", default=",", help="Cell delimiter for delimited files.")
@click.option("--no-header", is_flag=True, help="Input has no header row.")
@click.option("--id-column", help="Column holding record ids.")
@click.pass_obj
def ingest(settings, file, dataset_id, name, fmt, delimiter, no_header, id_column):
    """Import a delimited file or a record-list (JSON array) document."""
    try:
        store = settings.open_store()
        path = Path(file)
        content = path.read_bytes()
        if dataset_id is None:
            dataset_id = path.stem.replace(" ", "_") or None
        if fmt == "auto":
            fmt = "records" if path.suffix.lower() == ".json" else "csv"
        if fmt == "records":
            entry, report = store.create_from_record_list(
                content, dataset_id=dataset_id, name=name,
                source_path=str(path.resolve()),
            )
        else:
            options = DelimitedOptions(
                delimiter=delimiter, header_row=not no_header, id_column=id_column
            )
            entry, report = store.create_from_delimited(
                content, options, dataset_id=dataset_id, name=name,
                source_path=str(path.resolve()),
            )
        click.echo(
            f"{entry.snapshot.dataset_id}: {report.records_created} records "
            f"(v{entry.snapshot.version}, {len(report.warnings)} warnings)"
        )
        for locator, message in report.warnings:
            click.echo(f"  warning {locator}: {message}", err=True)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.argument("base_url")
@click.option("--id", "dataset_id", help="Dataset id.")
@click.option("--name", default="", help="Human-readable dataset name.")
@click.option("--prefix", default="oai_dc", help="OAI metadataPrefix.")
@click.option("--set", "set_spec", help="OAI set to harvest.")
@click.option("--map", "mappings", multiple=True,
              help="Element mapping like dc:title=Title (repeatable).")
@click.pass_obj
def harvest(settings, base_url, dataset_id, name, prefix, set_spec, mappings):
    """Harvest an OAI-PMH endpoint into a new dataset."""
    try:
        field_map = {}
        for m in mappings:
            k, _, v = m.partition("=")
            if not v:
                raise FacetBrowseError(f"mapping {m!r} must look like element=Field")
            field_map[k] = v
        try:
            config = HarvestConfig(
                base_url=base_url, metadata_prefix=prefix,
                set_spec=set_spec, field_map=field_map,
            )
        except ValueError as exc:
            raise FacetBrowseError(str(exc)) from None
        store = settings.open_store()
        entry, report = store.create_from_harvest(
            config, dataset_id=dataset_id, name=name
        )
        click.echo(
            f"{entry.snapshot.dataset_id}: {report.records_created} records "
            f"harvested ({report.rows_skipped} skipped)"
        )
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


def _single_dataset_id(store: DatasetStore) -> str:
    ids = sorted(store.datasets)
    if len(ids) == 1:
        return ids[0]
    if not ids:
        raise FacetBrowseError("no datasets ingested yet")
    raise FacetBrowseError(
        f"several datasets exist ({', '.join(ids)}); pass --dataset"
    )


_AUGMENT_KINDS = {
    "dates": StepKind.NORMALIZE_DATE,
    "geocode": StepKind.GEOCODE,
    "split": StepKind.SPLIT_LIST,
    "heading": StepKind.SPLIT_HEADING,
    "merge": StepKind.MERGE_FIELDS,
    "replace": StepKind.REPLACE_VALUES,
}


@main.command()
@click.argument("dataset_id", required=False)
@click.argument("kind", required=False,
                type=click.Choice(sorted(_AUGMENT_KINDS)))
@click.argument("fields", nargs=-1)
@click.option("--target", help="Target field (default: in place / first source).")
@click.option("--separator", default=" ", help="Separator for merge.")
@click.option("--map", "mappings", multiple=True, help="replace mapping old=new.")
@click.option("--pipeline", type=click.Path(exists=True),
              help="JSON file with a list of steps (applied instead of KIND).")
@click.pass_obj
def augment(settings, dataset_id, kind, fields, target, separator, mappings, pipeline):
    """Apply an augmentation step (or a pipeline file) to a dataset."""
    try:
        store = settings.open_store()
        if dataset_id is None:
            dataset_id = _single_dataset_id(store)
        if pipeline:
            doc = json.loads(Path(pipeline).read_text(encoding="utf-8"))
            steps = [AugmentationStep.from_json(s) for s in doc]
        else:
            if kind is None or not fields:
                raise FacetBrowseError("pass KIND and FIELD(s), or --pipeline FILE")
            step_kind = _AUGMENT_KINDS[kind]
            params: dict = {}
            if step_kind is StepKind.MERGE_FIELDS:
                params["separator"] = separator
            if step_kind is StepKind.REPLACE_VALUES:
                mapping = {}
                for m in mappings:
                    k, sep, v = m.partition("=")
                    if not sep:
                        raise FacetBrowseError(f"mapping {m!r} must look like old=new")
                    mapping[k] = v
                if not mapping:
                    raise FacetBrowseError("replace needs at least one --map old=new")
                params["mapping"] = mapping
            steps = [
                AugmentationStep(
                    kind=step_kind,
                    source_fields=tuple(fields),
                    target_field=target or fields[0],
                    params=params,
                )
            ]
        snapshot, report = store.augment(dataset_id, steps)
        changed = sum(s.get("changed", 0) for s in report.steps)
        click.echo(
            f"{dataset_id}: v{snapshot.version}, {changed} values changed, "
            f"{len(report.warnings)} warnings"
        )
        for locator, message in report.warnings[:20]:
            click.echo(f"  warning {locator}: {message}", err=True)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.group()
def views():
    """Manage views."""


def _parse_widget(raw: str) -> Widget:
    kind, _, arg = raw.partition(":")
    if kind == "search":
        return Widget(kind=WidgetKind.SEARCH_BOX)
    if kind == "filter" and arg:
        return Widget(kind=WidgetKind.FILTER_LIST, field=arg)
    if kind == "cloud" and arg:
        return Widget(kind=WidgetKind.TAG_CLOUD, field=arg)
    if kind == "logo" and arg:
        return Widget(kind=WidgetKind.LOGO, url=arg)
    raise FacetBrowseError(
        f"widget {raw!r} must be search, filter:FIELD, cloud:FIELD, or logo:URL"
    )


@views.command("add")
@click.option("--dataset", "dataset_id", help="Dataset the view reads.")
@click.option("--kind", required=True,
              type=click.Choice([k.value for k in ViewKind]))
@click.option("--field", "facet_field", help="Facet / date / location field.")
@click.option("--id", "view_id", help="View id (default: generated).")
@click.option("--k", default=5, type=int, help="Bucket count for top_k views.")
@click.option("--weight-field", help="Numeric field for weighted_hist views.")
@click.option("--columns", help="Comma-separated columns for table views.")
@click.option("--widget", "widgets", multiple=True,
              help="search | filter:FIELD | cloud:FIELD | logo:URL (repeatable).")
@click.pass_obj
def views_add(settings, dataset_id, kind, facet_field, view_id, k,
              weight_field, columns, widgets):
    """Configure a view over a dataset."""
    try:
        store = settings.open_store()
        if dataset_id is None:
            dataset_id = _single_dataset_id(store)
        config = ViewConfig(
            view_id=view_id or store._new_id("vw"),
            kind=ViewKind(kind),
            dataset_id=dataset_id,
            facet_field=facet_field,
            k=k,
            weight_field=weight_field,
            columns=tuple(c.strip() for c in columns.split(",")) if columns else None,
            widgets=tuple(_parse_widget(w) for w in widgets),
        )
        store.add_view(config)
        click.echo(f"{config.view_id}: {kind} view on {dataset_id}")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


def _parse_filters(filters: tuple[str, ...], text: str | None) -> FilterState:
    selections: dict[str, frozenset[str]] = {}
    acc: dict[str, set[str]] = {}
    for f in filters:
        name, sep, key = f.partition("=")
        if not sep:
            raise FacetBrowseError(f"filter {f!r} must look like Field=Key")
        acc.setdefault(name, set()).add(key)
    selections = {n: frozenset(keys) for n, keys in acc.items()}
    return FilterState(selections=selections, text_query=text)


@main.command()
@click.argument("kind", type=click.Choice([k.value for k in ViewKind]))
@click.argument("args", nargs=-1)
@click.option("--dataset", "dataset_id", help="Dataset (default: the only one).")
@click.option("--weight-field", help="Numeric field for weighted_hist.")
@click.option("--filter", "filters", multiple=True, help="Selection Field=Key (repeatable).")
@click.option("--q", "text", help="Free-text query.")
@click.pass_obj
def snapshot(settings, kind, args, dataset_id, weight_field, filters, text):
    """Compute a view result and write it to a file for static embedding.

    Usage: snapshot KIND [FIELD] OUT -- e.g. `snapshot pie Language out.json`
    (table views take no field: `snapshot table out.json`).
    """
    try:
        if len(args) == 2:
            facet_field, out = args
        elif len(args) == 1:
            facet_field, out = None, args[0]
        else:
            raise FacetBrowseError("usage: snapshot KIND [FIELD] OUT")
        store = settings.open_store()
        if dataset_id is None:
            dataset_id = _single_dataset_id(store)
        entry = store.dataset(dataset_id)
        view_kind = ViewKind(kind)
        if view_kind is ViewKind.GEO and facet_field:
            with entry.lock:
                entry.geo_fields[facet_field] = store.geo_tree
                entry._index = None
        config = ViewConfig(
            view_id="snapshot",
            kind=view_kind,
            dataset_id=dataset_id,
            facet_field=facet_field,
            weight_field=weight_field,
        )
        state = _parse_filters(filters, text)
        result = build_view(
            config, entry.snapshot, state, index=entry.index, geo_tree=store.geo_tree
        )
        doc = view_result_json(result)
        Path(out).write_text(
            json.dumps(doc, ensure_ascii=False, indent=2), encoding="utf-8"
        )
        click.echo(f"wrote {out} ({result.total} records under filter)")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.argument("dataset_id", required=False)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("-o", "--output", type=click.Path(), help="Output file (default: stdout).")
@click.option("--filter", "filters", multiple=True, help="Selection Field=Key (repeatable).")
@click.option("--q", "text", help="Free-text query.")
@click.pass_obj
def export(settings, dataset_id, fmt, output, filters, text):
    """Export (filtered) records as CSV or JSON."""
    try:
        store = settings.open_store()
        if dataset_id is None:
            dataset_id = _single_dataset_id(store)
        entry = store.dataset(dataset_id)
        state = _parse_filters(filters, text)
        if fmt == "csv":
            data = export_csv(entry.snapshot, entry.index, state)
        else:
            data = export_json(entry.snapshot, entry.index, state)
        if output:
            Path(output).write_bytes(data)
            click.echo(f"wrote {output}")
        else:
            sys.stdout.buffer.write(data)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.option("--host", default="127.0.0.1", help="Bind address.")
@click.option("--ui-dir", type=click.Path(), help="Static browse UI to mount at /ui.")
@click.pass_obj
def serve(settings, host, ui_dir):
    """Run the HTTP API server."""
    try:
        import uvicorn

        from .server import create_app

        store = settings.open_store()
        app = create_app(store, ui_dir=ui_dir)
        uvicorn.run(app, host=host, port=settings.port, log_level="info")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


if __name__ == "__main__":
    main()
