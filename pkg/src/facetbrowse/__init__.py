"""Faceted browse engine for digital collections.

Ingest record metadata (delimited files, record-list documents, OAI-PMH
harvests), type and augment fields, index them for tightly coupled faceted
queries, and serve descriptive, browsable visualizations through an HTTP
API and a CLI.
"""

from .augment import (
    AugmentationStep,
    Gazetteer,
    StepKind,
    apply_pipeline,
    builtin_gazetteer,
    geocode,
    load_gazetteer,
    merge_fields,
    normalize_date,
    replace_values,
    split_heading,
    split_list,
)
from .engine import (
    FacetCounts,
    FacetIndex,
    FilterState,
    build_index,
    facet_counts,
    filtered_ids,
    zero_result_guard,
)
from .errors import FacetBrowseError
from .geo import GeoNode, GeoTree, builtin_geo_tree, load_geo_tree
from .ingest import (
    DelimitedOptions,
    ImportReport,
    parse_delimited,
    parse_record_list,
)
from .oai import HarvestConfig, harvest_oai
from .schema import (
    MISSING,
    DatasetSnapshot,
    FieldSpec,
    FieldType,
    Record,
    Value,
    coerce,
    snapshot_diff,
)
from .store import DatasetStore, SchemaChange
from .views import (
    ViewConfig,
    ViewKind,
    Widget,
    WidgetKind,
    geo_view,
    pie_view,
    table_view,
    tag_cloud_view,
    timeline_view,
    top_k_view,
    weighted_hist_view,
)

__version__ = "0.1.0"
