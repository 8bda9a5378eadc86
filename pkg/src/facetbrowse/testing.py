"""Mock OAI-PMH server fixture: static paged ListRecords responses.

Serves a fixed list of Dublin Core records over a local HTTP socket, split
into resumptionToken pages. Failure modes (error codes, token loops, flaky
5xx responses) are switchable so client behavior can be exercised without a
real repository.
"""

from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse
from xml.sax.saxutils import escape

__all__ = ["MockOaiServer", "make_dc_records", "khrushchev_csv"]

# Language mix engineered so the token-filtered pie shows exact one-decimal
# shares: counts are the shares in tenths of a percent over 1000 records.
_KHRUSHCHEV_MIX = [
    ("Russian", 558),
    ("Other", 127),
    ("German", 88),
    ("Albanian", 55),
    ("Polish", 55),
    ("Romanian", 50),
    ("Czech", 39),
    ("Chinese", 28),
]

_FILLER_MIX = [("French", 180), ("Spanish", 170), ("Russian", 150)]


def khrushchev_csv() -> bytes:
    """A 1500-record dataset whose 'Khrushchev' slice has engineered shares.

    1000 records mention the token in their description (language mix per
    ``_KHRUSHCHEV_MIX``); 500 do not, so the search visibly narrows the pie.
    """
    rows = ["Record Id,Language,Description"]
    rid = 100000
    for language, count in _KHRUSHCHEV_MIX:
        for _ in range(count):
            rows.append(f"{rid},{language},Report mentioning Khrushchev directly")
            rid += 1
    for language, count in _FILLER_MIX:
        for _ in range(count):
            rows.append(f"{rid},{language},Routine cable with no such mention")
            rid += 1
    return "\n".join(rows).encode("utf-8")


def make_dc_records(count: int, prefix: str = "oai:mock") -> list[dict]:
    """Generate simple Dublin Core record dicts for the mock server."""
    languages = ["Russian", "German", "Polish", "Bulgarian", "Chinese"]
    out = []
    for i in range(1, count + 1):
        out.append(
            {
                "identifier": f"{prefix}:{i}",
                "datestamp": "2014-01-10",
                "elements": [
                    ("title", f"Document {i}"),
                    ("language", languages[i % len(languages)]),
                    ("subject", f"subject-{i % 3}"),
                    ("subject", f"subject-{(i + 1) % 3}"),
                ],
            }
        )
    return out


def _record_xml(rec: dict) -> str:
    if rec.get("deleted"):
        return (
            "<record><header status=\"deleted\">"
            f"<identifier>{escape(rec['identifier'])}</identifier>"
            f"<datestamp>{escape(rec.get('datestamp', ''))}</datestamp>"
            "</header></record>"
        )
    elements = "".join(
        f"<dc:{name}>{escape(text)}</dc:{name}>" for name, text in rec["elements"]
    )
    return (
        "<record><header>"
        f"<identifier>{escape(rec['identifier'])}</identifier>"
        f"<datestamp>{escape(rec.get('datestamp', ''))}</datestamp>"
        "</header><metadata>"
        '<oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/" '
        'xmlns:dc="http://purl.org/dc/elements/1.1/">'
        f"{elements}</oai_dc:dc></metadata></record>"
    )


class MockOaiServer:
    """Local OAI-PMH endpoint serving ``records`` in pages of ``page_size``.

    Use as a context manager; ``base_url`` points at the live socket.

    * ``error_code``: respond with that OAI error instead of records.
    * ``loop_token``: every page repeats the same resumptionToken.
    * ``fail_first``: respond 500 to the first N requests, then recover.
    """

    def __init__(
        self,
        records: list[dict],
        page_size: int = 10,
        error_code: str | None = None,
        loop_token: bool = False,
        fail_first: int = 0,
    ):
        self.records = records
        self.page_size = page_size
        self.error_code = error_code
        self.loop_token = loop_token
        self.failures_left = fail_first
        self.request_count = 0
        self.requests: list[str] = []
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/oai"

    def _page_xml(self, query: dict) -> str:
        if self.error_code:
            body = f'<error code="{self.error_code}">mock error</error>'
        else:
            token = query.get("resumptionToken", [None])[0]
            start = int(token.split("-")[1]) if token else 0
            page = self.records[start : start + self.page_size]
            nxt = start + self.page_size
            records_xml = "".join(_record_xml(r) for r in page)
            if self.loop_token:
                token_xml = "<resumptionToken>loop-0</resumptionToken>"
            elif nxt < len(self.records):
                token_xml = f"<resumptionToken>page-{nxt}</resumptionToken>"
            else:
                token_xml = ""
            body = f"<ListRecords>{records_xml}{token_xml}</ListRecords>"
        return (
            '<?xml version="1.0" encoding="UTF-8"?>'
            '<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/">'
            "<responseDate>2014-01-10T00:00:00Z</responseDate>"
            '<request verb="ListRecords">mock</request>'
            f"{body}</OAI-PMH>"
        )

    def start(self) -> "MockOaiServer":
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):  # noqa: N802 (http.server API)
                outer.request_count += 1
                outer.requests.append(self.path)
                if outer.failures_left > 0:
                    outer.failures_left -= 1
                    self.send_response(500)
                    self.end_headers()
                    return
                query = parse_qs(urlparse(self.path).query)
                payload = outer._page_xml(query).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "text/xml; charset=utf-8")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "MockOaiServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
