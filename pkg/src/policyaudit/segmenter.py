"""Heading-structure segmentation of policy HTML and jurisdiction tagging.

A policy document becomes one segment per heading with non-empty direct
body text. Headings are h1-h6 plus elements carrying an ARIA heading
role; bold-paragraph pseudo-headings are deliberately not treated as
headings. Collapsed accordion content counts: DOM presence, not visual
visibility, defines the corpus.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .corpus import Company, PolicySegment

SYNTHETIC_ROOT = "Document"

_HEADING_TAGS = {"h1": 1, "h2": 2, "h3": 3, "h4": 4, "h5": 5, "h6": 6}
_SKIP_CONTENT_TAGS = {"script", "style", "template", "head", "noscript"}


class EmptyDocumentError(Exception):
    """Raised for documents with no extractable text."""


def normalize_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


@dataclass
class HeadingNode:
    level: int
    title: str
    body: str = ""
    children: list["HeadingNode"] = field(default_factory=list)


class _HeadingExtractor(HTMLParser):
    """Linear walk over the document collecting (level, title, body) runs."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        # Each run: [level, title_or_None, list_of_text_chunks]
        self.runs: list[list] = [[0, None, []]]
        self._skip_depth = 0
        self._heading_level: Optional[int] = None
        self._heading_tag: Optional[str] = None
        self._heading_nest = 0
        self._heading_chunks: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_CONTENT_TAGS:
            self._skip_depth += 1
            return
        if self._heading_level is not None:
            if tag == self._heading_tag:
                # Nested same-tag markup inside a heading.
                self._heading_nest += 1
                return
            if tag not in _HEADING_TAGS:
                # Other nested markup contributes to the title.
                return
            # A new heading opening while another is still open means the
            # previous one was never closed; flush it and start fresh.
            self._flush_heading()
        level = _HEADING_TAGS.get(tag)
        if level is None:
            a = dict(attrs)
            if a.get("role") == "heading":
                try:
                    level = int(a.get("aria-level", "2"))
                except ValueError:
                    level = 2
                level = min(max(level, 1), 6)
        if level is not None:
            self._heading_level = level
            self._heading_tag = tag
            self._heading_nest = 0
            self._heading_chunks = []

    def handle_endtag(self, tag):
        if tag in _SKIP_CONTENT_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._heading_level is not None and tag == self._heading_tag:
            if self._heading_nest:
                self._heading_nest -= 1
                return
            self._flush_heading()

    def _flush_heading(self):
        title = normalize_ws("".join(self._heading_chunks))
        self.runs.append([self._heading_level, title, []])
        self._heading_level = None
        self._heading_tag = None
        self._heading_nest = 0
        self._heading_chunks = []

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._heading_level is not None:
            self._heading_chunks.append(data)
        else:
            self.runs[-1][2].append(data)

    def close(self):
        super().close()
        if self._heading_level is not None:
            # Unclosed heading at end of input; flush it as a heading.
            self._flush_heading()


def parse_heading_tree(html: str) -> HeadingNode:
    """Parse HTML into a heading tree rooted at a synthetic document node."""
    parser = _HeadingExtractor()
    parser.feed(html)
    parser.close()

    root = HeadingNode(level=0, title=SYNTHETIC_ROOT)
    stack = [root]
    for level, title, chunks in parser.runs:
        body = normalize_ws(" ".join(chunks))
        if title is None:
            root.body = body
            continue
        # Real documents skip levels; pop to the nearest shallower heading.
        while len(stack) > 1 and stack[-1].level >= level:
            stack.pop()
        node = HeadingNode(level=level, title=title, body=body)
        stack[-1].children.append(node)
        stack.append(node)
    return root


def _walk(node: HeadingNode, path: tuple[str, ...]):
    here = path + (node.title,)
    yield here, node
    for child in node.children:
        yield from _walk(child, here)


def segment_document(doc, company: Optional[Company] = None,
                     id_prefix: str = "") -> list[PolicySegment]:
    """Split a policy document into one segment per heading with body text.

    ``doc`` is a RawPolicyDocument or an HTML string. Headings with an
    empty direct body produce no segment; their titles still appear on
    descendants' heading paths. Deterministic and idempotent.
    """
    html = doc if isinstance(doc, str) else doc.body
    if company is None and not isinstance(doc, str):
        company = doc.company
    if company is None:
        company = Company(name="unknown")

    root = parse_heading_tree(html)
    segments = []
    index = 0
    for path, node in _walk(root, ()):
        if not node.body:
            continue
        index += 1
        segments.append(PolicySegment(
            segment_id=f"{id_prefix or company.name}-{index:04d}",
            company=company,
            heading_path=path,
            text=node.body,
        ))
    if not segments:
        raise EmptyDocumentError("document contains no extractable text")
    return segments


@dataclass(frozen=True)
class JurisdictionScope:
    kind: str  # universal | us_state | non_us | children_or_transfer_special
    label: str = ""
    matched_cue: str = ""


UNIVERSAL = JurisdictionScope(kind="universal")


@dataclass(frozen=True)
class LexiconEntry:
    cue: str
    kind: str  # us_state | non_us
    label: str


def load_lexicon(path=None) -> list[LexiconEntry]:
    """Load a jurisdiction lexicon: one ``cue<TAB>kind<TAB>label`` per line."""
    if path is None:
        text = resources.files("policyaudit.data").joinpath(
            "jurisdiction_lexicon.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"lexicon line {line_no}: expected 3 tab-separated "
                             f"fields, got {len(parts)}")
        cue, kind, label = parts
        if kind not in ("us_state", "non_us"):
            raise ValueError(f"lexicon line {line_no}: unknown kind {kind!r}")
        entries.append(LexiconEntry(cue=cue, kind=kind, label=label))
    return entries


def _cue_pattern(cue: str) -> re.Pattern:
    return re.compile(r"(?<![A-Za-z])" + re.escape(cue) + r"(?![A-Za-z])",
                      re.IGNORECASE)


def tag_jurisdiction(heading_path: Iterable[str],
                     lexicon: list[LexiconEntry]) -> JurisdictionScope:
    """Assign a jurisdiction scope from heading-path lexicon cues.

    The deepest matching heading wins; on a tie at the same depth a
    us_state cue beats a non_us cue. No match anywhere means universal.
    """
    best: Optional[tuple[int, int, LexiconEntry]] = None
    for depth, title in enumerate(heading_path):
        for entry in lexicon:
            if _cue_pattern(entry.cue).search(title):
                rank = (depth, 1 if entry.kind == "us_state" else 0)
                if best is None or rank > (best[0], best[1]):
                    best = (rank[0], rank[1], entry)
    if best is None:
        return UNIVERSAL
    entry = best[2]
    return JurisdictionScope(kind=entry.kind, label=entry.label,
                             matched_cue=entry.cue)
