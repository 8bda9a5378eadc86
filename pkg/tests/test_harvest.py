"""OAI-PMH harvesting against the bundled mock endpoint."""

from __future__ import annotations

import pytest

from facetbrowse.oai import (
    HarvestConfig,
    NetworkError,
    ProtocolError,
    TokenLoop,
    harvest_oai,
)
from facetbrowse.schema import FieldType
from facetbrowse.testing import MockOaiServer, make_dc_records


def test_pagination_25_records_3_requests():
    records = make_dc_records(25)
    with MockOaiServer(records, page_size=10) as server:
        snapshot, report = harvest_oai(HarvestConfig(base_url=server.base_url))
        assert report.records_created == 25
        assert len(snapshot.records) == 25
        assert server.request_count == 3
    ids = {r.record_id for r in snapshot.records}
    assert ids == {f"oai:mock:{i}" for i in range(1, 26)}


def test_dublin_core_fields_and_repeats_become_lists():
    records = make_dc_records(3)
    with MockOaiServer(records, page_size=10) as server:
        snapshot, _ = harvest_oai(HarvestConfig(base_url=server.base_url))
    by_name = {f.name: f for f in snapshot.schema}
    assert by_name["Title"].ftype is FieldType.TEXT
    assert by_name["Subject"].ftype is FieldType.LIST
    assert by_name["Subject"].multivalued
    record = snapshot.records[0]
    assert record.get("Title").display() == "Document 1"
    assert len(record.get("Subject").items) == 2


def test_field_map_overrides_element_names():
    records = make_dc_records(2)
    config_kwargs = {"field_map": {"dc:language": "Original Language"}}
    with MockOaiServer(records, page_size=10) as server:
        snapshot, _ = harvest_oai(
            HarvestConfig(base_url=server.base_url, **config_kwargs)
        )
    names = [f.name for f in snapshot.schema]
    assert "Original Language" in names
    assert "Language" not in names


def test_no_records_match_yields_empty_snapshot_with_warning():
    with MockOaiServer([], error_code="noRecordsMatch") as server:
        snapshot, report = harvest_oai(HarvestConfig(base_url=server.base_url))
    assert len(snapshot.records) == 0
    assert any("noRecordsMatch" in msg for _, msg in report.warnings)


def test_other_protocol_errors_surface_verbatim():
    with MockOaiServer([], error_code="badArgument") as server:
        with pytest.raises(ProtocolError) as exc:
            harvest_oai(HarvestConfig(base_url=server.base_url))
    assert "badArgument" in str(exc.value)


def test_token_loop_detected():
    records = make_dc_records(30)
    with MockOaiServer(records, page_size=10, loop_token=True) as server:
        with pytest.raises(TokenLoop):
            harvest_oai(HarvestConfig(base_url=server.base_url))


def test_deleted_records_skipped_with_warning():
    records = make_dc_records(5)
    records[2]["deleted"] = True
    with MockOaiServer(records, page_size=10) as server:
        snapshot, report = harvest_oai(HarvestConfig(base_url=server.base_url))
    assert len(snapshot.records) == 4
    assert report.rows_skipped == 1
    assert any("deleted" in msg for _, msg in report.warnings)
    assert report.rows_read == report.records_created + report.rows_skipped


def test_duplicate_identifiers_first_wins_with_warning():
    records = make_dc_records(4)
    records[3]["identifier"] = records[0]["identifier"]
    records[3]["elements"] = [("title", "Changed Title")]
    with MockOaiServer(records, page_size=10) as server:
        snapshot, report = harvest_oai(HarvestConfig(base_url=server.base_url))
    assert len(snapshot.records) == 3
    first = next(r for r in snapshot.records if r.record_id == "oai:mock:1")
    assert first.get("Title").display() == "Document 1"
    assert any("duplicate" in msg for _, msg in report.warnings)


def test_network_retry_recovers_after_transient_failures():
    records = make_dc_records(5)
    with MockOaiServer(records, page_size=10, fail_first=2) as server:
        snapshot, _ = harvest_oai(
            HarvestConfig(base_url=server.base_url), retries=3, backoff=0.01
        )
        assert len(snapshot.records) == 5
        assert server.request_count == 3  # two failures plus the success


def test_network_error_after_retries_exhausted():
    records = make_dc_records(5)
    with MockOaiServer(records, page_size=10, fail_first=5) as server:
        with pytest.raises(NetworkError):
            harvest_oai(
                HarvestConfig(base_url=server.base_url), retries=3, backoff=0.01
            )
        assert server.request_count == 3


def test_invalid_base_url_rejected():
    with pytest.raises(ValueError):
        HarvestConfig(base_url="not a url")
