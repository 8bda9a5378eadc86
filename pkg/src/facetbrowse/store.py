"""Dataset registry: snapshot publication, persistence, and refresh replay.

One directory per dataset under the data dir, one file per snapshot version,
plus a meta file carrying the source descriptor and the recorded step log
(augmentations and schema changes) that refresh replays in order. Mutations
are serialized per dataset; published snapshots and their indexes are
immutable, so reads never block.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .augment import (
    AugmentationStep,
    Gazetteer,
    PipelineReport,
    apply_pipeline,
)
from .engine import FacetIndex, build_index
from .errors import FacetBrowseError, UnknownDataset, UnknownView, UpstreamError
from .geo import GeoTree
from .ingest import DelimitedOptions, ImportReport, parse_delimited, parse_record_list
from .oai import HarvestConfig, harvest_oai
from .schema import (
    CoercionError,
    DatasetSnapshot,
    FieldSpec,
    FieldType,
    Record,
    SnapshotDiff,
    Value,
    coerce,
    snapshot_diff,
)
from .views import ViewConfig, ViewKind

__all__ = [
    "DatasetStore",
    "DatasetEntry",
    "SourceUnavailable",
    "SchemaChange",
    "apply_schema_changes",
]

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class SourceUnavailable(UpstreamError):
    code = "SourceUnavailable"


@dataclass
class SchemaChange:
    """One requested field change: retype and/or enable/disable."""

    name: str
    ftype: FieldType | None = None
    enabled: bool | None = None

    def to_json(self) -> dict:
        out: dict = {"name": self.name}
        if self.ftype is not None:
            out["ftype"] = self.ftype.value
        if self.enabled is not None:
            out["enabled"] = self.enabled
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SchemaChange":
        return cls(
            name=obj["name"],
            ftype=FieldType(obj["ftype"]) if "ftype" in obj else None,
            enabled=obj.get("enabled"),
        )


@dataclass
class DatasetEntry:
    """Registry slot for one dataset: current snapshot plus derived index."""

    snapshot: DatasetSnapshot
    name: str = ""
    steps: list[dict] = field(default_factory=list)
    geo_fields: dict[str, GeoTree] = field(default_factory=dict)
    source_bytes: bytes | None = None
    lock: threading.RLock = field(default_factory=threading.RLock)
    _index: FacetIndex | None = None

    @property
    def index(self) -> FacetIndex:
        if self._index is None or self._index.version != self.snapshot.version:
            self._index = build_index(self.snapshot, self.geo_fields)
        return self._index


# ---------------------------------------------------------------------------
# Value / snapshot (de)serialization for the on-disk format


def _value_to_json(value: Value) -> list:
    kind = value.kind
    assert kind is not None
    if kind is FieldType.LOCATION:
        lat, lon = value.payload  # type: ignore[misc]
        return [kind.value, lat, lon]
    if kind is FieldType.LIST:
        return [kind.value, list(value.items)]
    return [kind.value, value.display()]


def _value_from_json(obj: list) -> Value:
    kind = FieldType(obj[0])
    if kind is FieldType.LOCATION:
        return Value.location(obj[1], obj[2])
    if kind is FieldType.LIST:
        return Value.list_(tuple(obj[1]))
    if kind is FieldType.NUMBER:
        return Value(FieldType.NUMBER, Decimal(obj[1]))
    if kind is FieldType.DATETIME:
        from .schema import parse_flexible_datetime

        return Value.datetime_(parse_flexible_datetime(obj[1]))
    return Value(kind, obj[1])


def snapshot_to_json(snapshot: DatasetSnapshot) -> dict:
    return {
        "dataset_id": snapshot.dataset_id,
        "version": snapshot.version,
        "source": snapshot.source,
        "schema": [
            {
                "name": f.name,
                "ftype": f.ftype.value,
                "enabled": f.enabled,
                "multivalued": f.multivalued,
                "fold_case": f.fold_case,
            }
            for f in snapshot.schema
        ],
        "records": [
            {
                "id": r.record_id,
                "values": {n: _value_to_json(v) for n, v in r.values.items()},
            }
            for r in snapshot.records
        ],
    }


def snapshot_from_json(obj: dict) -> DatasetSnapshot:
    return DatasetSnapshot(
        dataset_id=obj["dataset_id"],
        version=obj["version"],
        source=obj.get("source", {}),
        schema=tuple(
            FieldSpec(
                name=f["name"],
                ftype=FieldType(f["ftype"]),
                enabled=f.get("enabled", True),
                multivalued=f.get("multivalued", False),
                fold_case=f.get("fold_case", False),
            )
            for f in obj["schema"]
        ),
        records=tuple(
            Record(
                record_id=r["id"],
                values={n: _value_from_json(v) for n, v in r["values"].items()},
            )
            for r in obj["records"]
        ),
    )


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def apply_schema_changes(
    snapshot: DatasetSnapshot, changes: "list[SchemaChange]"
) -> tuple[DatasetSnapshot, list[tuple[str, str]]]:
    """Apply field retypes / enable flags, publishing version + 1.

    Retyped fields have their stored values coerced; values that do not
    parse stay untouched, each with a (record id, message) warning.
    """
    by_name = {f.name: f for f in snapshot.schema}
    for change in changes:
        spec = by_name.get(change.name)
        if spec is None:
            raise FacetBrowseError(f"unknown field {change.name!r}", locator=change.name)
        if change.ftype is not None and change.ftype is not spec.ftype:
            if FieldType.LIST in (change.ftype, spec.ftype):
                raise FacetBrowseError(
                    f"cannot retype {change.name!r} {spec.ftype.value} -> "
                    f"{change.ftype.value}; use a splitting augmentation",
                    locator=change.name,
                )

    schema = []
    retyped: dict[str, FieldType] = {}
    for spec in snapshot.schema:
        for change in changes:
            if change.name != spec.name:
                continue
            ftype = spec.ftype
            if change.ftype is not None and change.ftype is not spec.ftype:
                retyped[spec.name] = change.ftype
                ftype = change.ftype
            spec = FieldSpec(
                name=spec.name,
                ftype=ftype,
                enabled=spec.enabled if change.enabled is None else change.enabled,
                multivalued=spec.multivalued,
                fold_case=spec.fold_case,
            )
        schema.append(spec)

    warnings: list[tuple[str, str]] = []
    records = snapshot.records
    if retyped:
        new_records = []
        for record in records:
            values = dict(record.values)
            for name, ftype in retyped.items():
                value = values.get(name)
                if value is None or value.kind is ftype:
                    continue
                try:
                    values[name] = coerce(value.display(), ftype, name)
                except CoercionError as exc:
                    warnings.append((record.record_id, exc.message))
            new_records.append(Record(record_id=record.record_id, values=values))
        records = tuple(new_records)

    new_snapshot = DatasetSnapshot(
        dataset_id=snapshot.dataset_id,
        version=snapshot.version + 1,
        schema=tuple(schema),
        records=records,
        source=snapshot.source,
    )
    return new_snapshot, warnings


class DatasetStore:
    """All datasets and views, in memory and (optionally) on disk."""

    def __init__(
        self,
        data_dir: "Path | str | None" = None,
        gazetteer: Gazetteer | None = None,
        geo_tree: GeoTree | None = None,
    ):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.gazetteer = gazetteer
        self.geo_tree = geo_tree
        self.datasets: dict[str, DatasetEntry] = {}
        self.views: dict[str, ViewConfig] = {}
        self._registry_lock = threading.RLock()
        if self.data_dir is not None:
            self._load_all()

    # -- lookup ------------------------------------------------------------

    def dataset(self, dataset_id: str) -> DatasetEntry:
        entry = self.datasets.get(dataset_id)
        if entry is None:
            raise UnknownDataset(f"no dataset {dataset_id!r}")
        return entry

    def view(self, view_id: str) -> ViewConfig:
        config = self.views.get(view_id)
        if config is None:
            raise UnknownView(f"no view {view_id!r}")
        return config

    def _new_id(self, prefix: str) -> str:
        return f"{prefix}-{uuid.uuid4().hex[:8]}"

    @staticmethod
    def _check_id(candidate: str) -> str:
        if not _ID_RE.match(candidate):
            raise FacetBrowseError(
                f"id {candidate!r} may only contain letters, digits, '-' and '_'"
            )
        return candidate

    # -- creation ----------------------------------------------------------

    def create_from_delimited(
        self,
        content: bytes,
        options: DelimitedOptions | None = None,
        dataset_id: str | None = None,
        name: str = "",
        source_path: str | None = None,
    ) -> tuple[DatasetEntry, ImportReport]:
        opts = options or DelimitedOptions()
        dataset_id = self._claim_id(dataset_id)
        source = {
            "type": "delimited",
            "options": {
                "delimiter": opts.delimiter,
                "header_row": opts.header_row,
                "id_column": opts.id_column,
            },
        }
        if source_path:
            source["path"] = source_path
        snapshot, report = parse_delimited(
            content, opts, dataset_id=dataset_id, version=1, source=source
        )
        entry = self._publish_new(snapshot, name, content)
        return entry, report

    def create_from_record_list(
        self,
        content: bytes,
        dataset_id: str | None = None,
        name: str = "",
        source_path: str | None = None,
    ) -> tuple[DatasetEntry, ImportReport]:
        dataset_id = self._claim_id(dataset_id)
        source: dict = {"type": "record_list"}
        if source_path:
            source["path"] = source_path
        snapshot, report = parse_record_list(
            content, dataset_id=dataset_id, version=1, source=source
        )
        entry = self._publish_new(snapshot, name, content)
        return entry, report

    def create_from_harvest(
        self,
        config: HarvestConfig,
        dataset_id: str | None = None,
        name: str = "",
        retries: int = 3,
        backoff: float = 1.0,
    ) -> tuple[DatasetEntry, ImportReport]:
        dataset_id = self._claim_id(dataset_id)
        snapshot, report = harvest_oai(
            config, dataset_id=dataset_id, version=1, retries=retries, backoff=backoff
        )
        entry = self._publish_new(snapshot, name, None)
        return entry, report

    def _claim_id(self, dataset_id: str | None) -> str:
        with self._registry_lock:
            if dataset_id is None:
                dataset_id = self._new_id("ds")
            else:
                self._check_id(dataset_id)
            if dataset_id in self.datasets:
                raise FacetBrowseError(f"dataset {dataset_id!r} already exists")
            return dataset_id

    def _publish_new(
        self, snapshot: DatasetSnapshot, name: str, source_bytes: bytes | None
    ) -> DatasetEntry:
        entry = DatasetEntry(snapshot=snapshot, name=name, source_bytes=source_bytes)
        with self._registry_lock:
            self.datasets[snapshot.dataset_id] = entry
        self._persist(entry)
        return entry

    # -- mutation ----------------------------------------------------------

    def augment(
        self, dataset_id: str, steps: "list[AugmentationStep]"
    ) -> tuple[DatasetSnapshot, PipelineReport]:
        entry = self.dataset(dataset_id)
        with entry.lock:
            snapshot, report = apply_pipeline(
                entry.snapshot, steps, gazetteer=self.gazetteer
            )
            entry.steps.append(
                {"type": "augment", "steps": [s.to_json() for s in steps]}
            )
            entry.snapshot = snapshot
            self._persist(entry)
        return snapshot, report


    def patch_schema(
        self, dataset_id: str, changes: "list[SchemaChange]"
    ) -> tuple[DatasetSnapshot, list[tuple[str, str]]]:
        """Retype and enable/disable fields, coercing stored values.

        Values that cannot be coerced stay untouched (with a warning), in
        keeping with non-destructive refinement. Retyping to or from LIST is
        not supported; splitting augmentations own that conversion. The
        change is recorded for refresh replay.
        """
        entry = self.dataset(dataset_id)
        with entry.lock:
            new_snapshot, warnings = apply_schema_changes(entry.snapshot, changes)
            entry.steps.append(
                {"type": "schema", "changes": [c.to_json() for c in changes]}
            )
            entry.snapshot = new_snapshot
            self._persist(entry)
        return new_snapshot, warnings

    def refresh(
        self, dataset_id: str, new_content: bytes | None = None
    ) -> tuple[DatasetSnapshot, SnapshotDiff, ImportReport]:
        """Re-run the original import path and replay the recorded steps.

        Publishes version + 1 and reports the diff against the prior
        version. For uploaded sources a new body may be supplied (the
        re-upload flow); harvest sources are re-harvested.
        """
        entry = self.dataset(dataset_id)
        with entry.lock:
            prior = entry.snapshot
            source = prior.source
            stype = source.get("type")
            if stype == "oai":
                config = HarvestConfig(
                    base_url=source["base_url"],
                    metadata_prefix=source.get("metadata_prefix", "oai_dc"),
                    set_spec=source.get("set_spec"),
                    field_map=dict(source.get("field_map") or {}),
                )
                fresh, report = harvest_oai(config, dataset_id=dataset_id)
            elif stype in ("delimited", "record_list"):
                content = new_content
                if content is None and source.get("path"):
                    path = Path(source["path"])
                    if not path.exists():
                        raise SourceUnavailable(
                            f"source file {source['path']} is gone"
                        )
                    content = path.read_bytes()
                if content is None:
                    content = entry.source_bytes
                if content is None:
                    content = self._read_source_copy(dataset_id)
                if content is None:
                    raise SourceUnavailable(
                        f"dataset {dataset_id!r} has no retrievable source"
                    )
                if stype == "delimited":
                    opts = source.get("options") or {}
                    fresh, report = parse_delimited(
                        content,
                        DelimitedOptions(
                            delimiter=opts.get("delimiter", ","),
                            header_row=opts.get("header_row", True),
                            id_column=opts.get("id_column"),
                        ),
                        dataset_id=dataset_id,
                        source=source,
                    )
                else:
                    fresh, report = parse_record_list(
                        content, dataset_id=dataset_id, source=source
                    )
                entry.source_bytes = content
            else:
                raise SourceUnavailable(
                    f"dataset {dataset_id!r} has no recorded source"
                )

            replayed = self._replay_steps(fresh, entry.steps)
            new_snapshot = replayed.with_(version=prior.version + 1)
            diff = snapshot_diff(prior, new_snapshot)
            entry.snapshot = new_snapshot
            self._persist(entry)
        return new_snapshot, diff, report

    def _replay_steps(
        self, snapshot: DatasetSnapshot, steps: "list[dict]"
    ) -> DatasetSnapshot:
        for recorded in steps:
            if recorded["type"] == "augment":
                parsed = [AugmentationStep.from_json(s) for s in recorded["steps"]]
                snapshot, _ = apply_pipeline(snapshot, parsed, gazetteer=self.gazetteer)
            else:
                changes = [SchemaChange.from_json(c) for c in recorded["changes"]]
                snapshot, _ = apply_schema_changes(snapshot, changes)
        return snapshot

    # -- views ---------------------------------------------------------------

    def add_view(self, config: ViewConfig) -> ViewConfig:
        entry = self.dataset(config.dataset_id)
        if config.view_id in self.views:
            raise FacetBrowseError(f"view {config.view_id!r} already exists")
        self._check_id(config.view_id)
        if config.kind is not ViewKind.TABLE and config.facet_field is None:
            raise FacetBrowseError(
                f"{config.kind.value} views require facet_field"
            )
        if config.kind is ViewKind.WEIGHTED_HIST and config.weight_field is None:
            raise FacetBrowseError("weighted histogram views require weight_field")
        needed = [f for f in (config.facet_field, config.weight_field) if f]
        if config.columns:
            needed.extend(config.columns)
        needed.extend(w.field for w in config.widgets if w.field)
        enabled = {f.name for f in entry.snapshot.schema if f.enabled}
        for name in needed:
            if name not in enabled:
                raise FacetBrowseError(
                    f"view field {name!r} is not an enabled dataset field",
                    locator=name,
                )
        if config.kind is ViewKind.GEO:
            if self.geo_tree is None:
                raise FacetBrowseError(
                    "geographic views require a configured geo tree"
                )
            with entry.lock:
                entry.geo_fields[config.facet_field] = self.geo_tree
                entry._index = None
                self._persist(entry)  # geo binding must survive reloads
        with self._registry_lock:
            self.views[config.view_id] = config
        self._persist_view(config)
        return config

    # -- persistence ---------------------------------------------------------

    def _dataset_dir(self, dataset_id: str) -> Path:
        assert self.data_dir is not None
        return self.data_dir / "datasets" / dataset_id

    def _persist(self, entry: DatasetEntry) -> None:
        if self.data_dir is None:
            return
        d = self._dataset_dir(entry.snapshot.dataset_id)
        d.mkdir(parents=True, exist_ok=True)
        _atomic_write(
            d / f"v{entry.snapshot.version}.json",
            json.dumps(snapshot_to_json(entry.snapshot), ensure_ascii=False).encode(),
        )
        meta = {
            "dataset_id": entry.snapshot.dataset_id,
            "name": entry.name,
            "current_version": entry.snapshot.version,
            "steps": entry.steps,
            "geo_fields": sorted(entry.geo_fields),
        }
        _atomic_write(d / "meta.json", json.dumps(meta, ensure_ascii=False).encode())
        if entry.source_bytes is not None:
            _atomic_write(d / "source.dat", entry.source_bytes)

    def _read_source_copy(self, dataset_id: str) -> bytes | None:
        if self.data_dir is None:
            return None
        path = self._dataset_dir(dataset_id) / "source.dat"
        return path.read_bytes() if path.exists() else None

    def _persist_view(self, config: ViewConfig) -> None:
        if self.data_dir is None:
            return
        d = self.data_dir / "views"
        d.mkdir(parents=True, exist_ok=True)
        _atomic_write(
            d / f"{config.view_id}.json",
            json.dumps(config.to_json(), ensure_ascii=False).encode(),
        )

    def _load_all(self) -> None:
        assert self.data_dir is not None
        datasets_dir = self.data_dir / "datasets"
        if datasets_dir.is_dir():
            for d in sorted(datasets_dir.iterdir()):
                meta_path = d / "meta.json"
                if not meta_path.is_file():
                    continue
                meta = json.loads(meta_path.read_text())
                version = meta["current_version"]
                snap_path = d / f"v{version}.json"
                snapshot = snapshot_from_json(json.loads(snap_path.read_text()))
                entry = DatasetEntry(
                    snapshot=snapshot,
                    name=meta.get("name", ""),
                    steps=list(meta.get("steps", [])),
                )
                source_path = d / "source.dat"
                if source_path.exists():
                    entry.source_bytes = source_path.read_bytes()
                if self.geo_tree is not None:
                    for field_name in meta.get("geo_fields", []):
                        entry.geo_fields[field_name] = self.geo_tree
                self.datasets[snapshot.dataset_id] = entry
        views_dir = self.data_dir / "views"
        if views_dir.is_dir():
            for path in sorted(views_dir.glob("*.json")):
                config = ViewConfig.from_json(json.loads(path.read_text()))
                self.views[config.view_id] = config
                # re-derive geo bindings in case the meta predates the view
                if (
                    config.kind is ViewKind.GEO
                    and config.facet_field
                    and self.geo_tree is not None
                    and config.dataset_id in self.datasets
                ):
                    self.datasets[config.dataset_id].geo_fields.setdefault(
                        config.facet_field, self.geo_tree
                    )

    def load_snapshot_version(self, dataset_id: str, version: int) -> DatasetSnapshot:
        if self.data_dir is None:
            raise FacetBrowseError("no data directory configured")
        path = self._dataset_dir(dataset_id) / f"v{version}.json"
        if not path.exists():
            raise UnknownDataset(f"no version {version} for dataset {dataset_id!r}")
        return snapshot_from_json(json.loads(path.read_text()))
