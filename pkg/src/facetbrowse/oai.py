"""OAI-PMH 2.0 harvesting client (ListRecords over HTTP GET).

Issues ListRecords with the configured metadataPrefix, follows
resumptionToken paging until exhausted, and maps Dublin Core elements to
dataset fields. Deleted-status records are skipped with a warning; repeated
elements become LIST values; duplicate identifiers across pages are kept
first-wins with a warning.
"""

from __future__ import annotations

import logging
import time
import urllib.error
import urllib.parse
import urllib.request
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import UpstreamError
from .ingest import ImportReport
from .schema import DatasetSnapshot, FieldSpec, FieldType, Record, Value

__all__ = [
    "HarvestConfig",
    "ProtocolError",
    "NetworkError",
    "TokenLoop",
    "harvest_oai",
]

logger = logging.getLogger(__name__)

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
DC_NS = "http://purl.org/dc/elements/1.1/"

# OAI error code for "query matched nothing": an empty result, not a failure.
_EMPTY_RESULT_CODES = {"noRecordsMatch"}


class ProtocolError(UpstreamError):
    code = "ProtocolError"


class NetworkError(UpstreamError):
    code = "NetworkError"


class TokenLoop(UpstreamError):
    code = "TokenLoop"


@dataclass(frozen=True)
class HarvestConfig:
    """Endpoint plus element-to-field mapping for one harvest.

    ``field_map`` maps source element names ("dc:title") to dataset field
    names; unmapped Dublin Core elements default to the element name
    capitalized ("dc:title" -> "Title").
    """

    base_url: str
    metadata_prefix: str = "oai_dc"
    set_spec: str | None = None
    field_map: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        parsed = urllib.parse.urlparse(self.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"base_url is not an absolute URL: {self.base_url!r}")

    def field_name_for(self, element: str) -> str:
        qualified = f"dc:{element}"
        if qualified in self.field_map:
            return self.field_map[qualified]
        if element in self.field_map:
            return self.field_map[element]
        return element[:1].upper() + element[1:]


def _fetch(url: str, retries: int, backoff: float, timeout: float) -> bytes:
    """GET with retry: ``retries`` attempts, exponential backoff from ``backoff``."""
    last: Exception | None = None
    for attempt in range(retries):
        if attempt:
            delay = backoff * (2 ** (attempt - 1))
            logger.info("retrying %s in %.1fs (attempt %d)", url, delay, attempt + 1)
            time.sleep(delay)
        try:
            req = urllib.request.Request(url, headers={"User-Agent": "facetbrowse"})
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                if resp.status >= 500:
                    raise urllib.error.HTTPError(
                        url, resp.status, "server error", resp.headers, None
                    )
                return resp.read()
        except urllib.error.HTTPError as exc:
            last = exc
            if exc.code < 500:
                break  # client errors will not improve with retries
        except (urllib.error.URLError, TimeoutError, ConnectionError, OSError) as exc:
            last = exc
    raise NetworkError(f"request failed after {retries} attempts: {last}")


def _list_records_url(config: HarvestConfig, token: str | None) -> str:
    params: dict[str, str] = {"verb": "ListRecords"}
    if token is not None:
        params["resumptionToken"] = token
    else:
        params["metadataPrefix"] = config.metadata_prefix
        if config.set_spec:
            params["set"] = config.set_spec
    sep = "&" if "?" in config.base_url else "?"
    return config.base_url + sep + urllib.parse.urlencode(params)


def _tag(qname: str) -> str:
    return qname.rsplit("}", 1)[-1]


def _parse_page(data: bytes) -> tuple[list[ET.Element], str | None, ET.Element | None]:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ProtocolError(f"response is not well-formed XML: {exc}") from None
    error = root.find(f"{{{OAI_NS}}}error")
    if error is not None:
        return [], None, error
    list_records = root.find(f"{{{OAI_NS}}}ListRecords")
    if list_records is None:
        raise ProtocolError("response has no ListRecords element")
    records = list_records.findall(f"{{{OAI_NS}}}record")
    token_el = list_records.find(f"{{{OAI_NS}}}resumptionToken")
    token = None
    if token_el is not None and (token_el.text or "").strip():
        token = token_el.text.strip()
    return records, token, None


def _record_values(
    record: ET.Element, config: HarvestConfig
) -> tuple[str | None, bool, dict[str, list[str]]]:
    header = record.find(f"{{{OAI_NS}}}header")
    if header is None:
        return None, False, {}
    identifier_el = header.find(f"{{{OAI_NS}}}identifier")
    identifier = identifier_el.text.strip() if identifier_el is not None and identifier_el.text else None
    deleted = header.get("status") == "deleted"
    collected: dict[str, list[str]] = {}
    metadata = record.find(f"{{{OAI_NS}}}metadata")
    if metadata is not None and not deleted:
        for container in metadata:
            for el in container:
                text = (el.text or "").strip()
                if not text:
                    continue
                name = config.field_name_for(_tag(el.tag))
                collected.setdefault(name, []).append(text)
    return identifier, deleted, collected


def harvest_oai(
    config: HarvestConfig,
    dataset_id: str = "dataset",
    version: int = 1,
    retries: int = 3,
    backoff: float = 1.0,
    timeout: float = 30.0,
) -> tuple[DatasetSnapshot, ImportReport]:
    """Harvest every record from an OAI-PMH endpoint into a snapshot.

    Records are keyed by OAI identifier; single-valued elements become TEXT,
    repeated elements LIST. OAI protocol errors are surfaced verbatim as
    ProtocolError (except noRecordsMatch, which yields an empty snapshot with
    a warning). Seeing the same resumptionToken twice raises TokenLoop.
    """
    report = ImportReport()
    records: list[Record] = []
    seen_ids: set[str] = set()
    multivalued: set[str] = set()
    field_names: list[str] = []
    known_fields: set[str] = set()

    token: str | None = None
    seen_tokens: set[str] = set()
    page = 0
    while True:
        page += 1
        url = _list_records_url(config, token)
        data = _fetch(url, retries=retries, backoff=backoff, timeout=timeout)
        page_records, next_token, error = _parse_page(data)
        if error is not None:
            code = error.get("code", "unknown")
            message = (error.text or "").strip()
            if code in _EMPTY_RESULT_CODES:
                report.warn("endpoint", f"{code}: {message or 'no records matched'}")
                break
            raise ProtocolError(f"{code}: {message or 'OAI error'}")

        for rec in page_records:
            report.rows_read += 1
            identifier, deleted, collected = _record_values(rec, config)
            if identifier is None:
                report.rows_skipped += 1
                report.warn(f"page {page}", "record without identifier skipped")
                continue
            if deleted:
                report.rows_skipped += 1
                report.warn(identifier, "deleted record skipped")
                continue
            if identifier in seen_ids:
                report.rows_skipped += 1
                report.warn(identifier, "duplicate identifier; first occurrence kept")
                continue
            seen_ids.add(identifier)
            values: dict[str, Value] = {}
            for name, texts in collected.items():
                if name not in known_fields:
                    known_fields.add(name)
                    field_names.append(name)
                if len(texts) > 1:
                    multivalued.add(name)
                    values[name] = Value.list_(tuple(texts))
                else:
                    values[name] = Value.text(texts[0])
            records.append(Record(record_id=identifier, values=values))
            report.records_created += 1

        if next_token is None:
            break
        if next_token in seen_tokens:
            raise TokenLoop(f"resumptionToken {next_token!r} seen twice")
        seen_tokens.add(next_token)
        token = next_token

    # A field that is multi-valued anywhere is LIST everywhere: promote
    # single occurrences to one-element lists so the field is uniform.
    if multivalued:
        records = [
            Record(
                record_id=r.record_id,
                values={
                    name: (
                        Value.list_((v.display(),))
                        if name in multivalued and v.kind is FieldType.TEXT
                        else v
                    )
                    for name, v in r.values.items()
                },
            )
            for r in records
        ]

    schema = tuple(
        FieldSpec(
            name=n,
            ftype=FieldType.LIST if n in multivalued else FieldType.TEXT,
            multivalued=n in multivalued,
        )
        for n in field_names
    )
    snapshot = DatasetSnapshot(
        dataset_id=dataset_id,
        version=version,
        schema=schema,
        records=tuple(records),
        source={
            "type": "oai",
            "base_url": config.base_url,
            "metadata_prefix": config.metadata_prefix,
            "set_spec": config.set_spec,
            "field_map": dict(config.field_map),
        },
    )
    report.check()
    return snapshot, report
