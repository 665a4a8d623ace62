"""Policy document collection: direct HTTP with an archive fallback, plus
pre-fetched fixture ingestion for sites that need browser rendering."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import requests

from .corpus import Company

logger = logging.getLogger(__name__)

_HTML_TYPES = ("text/html", "application/xhtml+xml")
_FALLBACK_STATUSES = {403, 429}
DEFAULT_ARCHIVE_API = "https://archive.org/wayback/available"


@dataclass(frozen=True)
class RawPolicyDocument:
    company: Company
    source_url: str
    retrieval_method: str  # direct_http | archive_fallback | local_fixture
    retrieved_at: datetime
    body: str
    final_url: Optional[str] = None
    archive_snapshot_url: Optional[str] = None

    def __post_init__(self):
        if not self.body:
            raise ValueError("document body must be non-empty")
        if self.retrieval_method == "archive_fallback" and \
                not self.archive_snapshot_url:
            raise ValueError("archive_fallback requires a snapshot URL")


@dataclass(frozen=True)
class FetchConfig:
    timeout: float = 30.0
    retries: int = 2
    user_agent: str = "policyaudit/0.1 (policy transparency audit tool)"
    archive_api_url: str = DEFAULT_ARCHIVE_API
    max_redirects: int = 10
    retry_delay: float = 0.0


class UnreachableError(Exception):
    """Both the direct and archive paths failed."""

    def __init__(self, url: str, direct_reason: str, archive_reason: str):
        self.direct_reason = direct_reason
        self.archive_reason = archive_reason
        super().__init__(
            f"{url} unreachable: direct fetch failed ({direct_reason}); "
            f"archive fallback failed ({archive_reason})")


class ContentTypeError(Exception):
    """The response was not an HTML document."""


def _check_html(resp: requests.Response) -> None:
    ctype = resp.headers.get("Content-Type", "").split(";")[0].strip().lower()
    if ctype and ctype not in _HTML_TYPES:
        raise ContentTypeError(
            f"expected HTML, got content type {ctype!r} from {resp.url}")


def _get_with_retries(session: requests.Session, url: str,
                      config: FetchConfig) -> requests.Response:
    last: Optional[Exception] = None
    for attempt in range(config.retries + 1):
        if attempt and config.retry_delay:
            time.sleep(config.retry_delay)
        try:
            resp = session.get(url, timeout=config.timeout,
                               headers={"User-Agent": config.user_agent},
                               allow_redirects=True)
            if resp.status_code in _FALLBACK_STATUSES or \
                    resp.status_code >= 500:
                last = requests.HTTPError(f"status {resp.status_code}")
                continue
            resp.raise_for_status()
            return resp
        except requests.RequestException as exc:
            last = exc
    raise last if last is not None else RuntimeError("no attempt made")


def _archive_fallback(session: requests.Session, url: str,
                      config: FetchConfig) -> tuple[str, str, str]:
    """Return (body, snapshot_url, final_url) from the newest archive
    snapshot, found via the snapshot-availability endpoint."""
    now = datetime.now(timezone.utc).strftime("%Y%m%d%H%M%S")
    resp = session.get(config.archive_api_url,
                       params={"url": url, "timestamp": now},
                       timeout=config.timeout,
                       headers={"User-Agent": config.user_agent})
    resp.raise_for_status()
    closest = resp.json().get("archived_snapshots", {}).get("closest") or {}
    if not closest.get("available") or not closest.get("url"):
        raise requests.HTTPError(f"no archive snapshot available for {url}")
    snapshot_url = closest["url"]
    snap = session.get(snapshot_url, timeout=config.timeout,
                       headers={"User-Agent": config.user_agent},
                       allow_redirects=True)
    snap.raise_for_status()
    _check_html(snap)
    return snap.text, snapshot_url, snap.url


def fetch_policy(url: str, config: Optional[FetchConfig] = None,
                 company: Optional[Company] = None,
                 session: Optional[requests.Session] = None
                 ) -> RawPolicyDocument:
    """Fetch a policy page, falling back to the archive on 403/429/5xx.

    Raises UnreachableError carrying both failure reasons when both paths
    are exhausted, and ContentTypeError for non-HTML responses.
    """
    config = config or FetchConfig()
    company = company or Company(name="unknown")
    sess = session or requests.Session()
    sess.max_redirects = config.max_redirects

    direct_reason = None
    try:
        resp = _get_with_retries(sess, url, config)
        _check_html(resp)
        return RawPolicyDocument(
            company=company, source_url=url, retrieval_method="direct_http",
            retrieved_at=datetime.now(timezone.utc), body=resp.text,
            final_url=resp.url)
    except ContentTypeError:
        raise
    except requests.RequestException as exc:
        direct_reason = str(exc)
        logger.info("direct fetch of %s failed (%s); trying archive",
                    url, exc)

    try:
        body, snapshot_url, final_url = _archive_fallback(sess, url, config)
        return RawPolicyDocument(
            company=company, source_url=url,
            retrieval_method="archive_fallback",
            retrieved_at=datetime.now(timezone.utc), body=body,
            final_url=final_url, archive_snapshot_url=snapshot_url)
    except ContentTypeError:
        raise
    except (requests.RequestException, ValueError) as exc:
        raise UnreachableError(url, direct_reason, str(exc)) from exc


def ingest_fixture(path, company: Company) -> RawPolicyDocument:
    """Wrap a pre-fetched HTML file as a policy document."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"fixture file not found: {path}")
    body = path.read_text(encoding="utf-8")
    if not body.strip():
        raise ValueError(f"fixture file is empty: {path}")
    return RawPolicyDocument(
        company=company, source_url=path.as_uri(),
        retrieval_method="local_fixture",
        retrieved_at=datetime.now(timezone.utc), body=body)


def ingest_directory(directory, companies: Optional[dict[str, Company]] = None
                     ) -> list[RawPolicyDocument]:
    """Ingest every ``*.html`` file in a directory, ordered by filename.

    The company for each file defaults to the filename stem unless a
    mapping is given.
    """
    directory = Path(directory)
    docs = []
    for path in sorted(directory.glob("*.html")):
        name = path.stem
        company = (companies or {}).get(name, Company(name=name))
        docs.append(ingest_fixture(path, company))
    return docs
