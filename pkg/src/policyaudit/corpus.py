"""Corpus data model: categories, companies, segments, and JSONL persistence.

The corpus file format is line-delimited JSON, one segment per line, with
explicit field names. Unknown fields are preserved on round-trip so that
future corpus versions stay loadable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger(__name__)


class Category(str, Enum):
    FIRST_PARTY = "FIRST_PARTY"
    THIRD_PARTY = "THIRD_PARTY"
    USER_CHOICE = "USER_CHOICE"
    USER_ACCESS = "USER_ACCESS"
    RETENTION = "RETENTION"
    SECURITY = "SECURITY"
    POLICY_CHANGE = "POLICY_CHANGE"
    TRACKING = "TRACKING"
    INTL_SPECIFIC = "INTL_SPECIFIC"
    OTHER = "OTHER"
    REGIONAL = "REGIONAL"
    SALE_SHARING = "SALE_SHARING"
    AUTOMATED_DECISIONS = "AUTOMATED_DECISIONS"
    SENSITIVE_DATA = "SENSITIVE_DATA"


#: Categories that describe what a company does with data, as opposed to
#: procedures, boilerplate, or structural content.
SUBSTANTIVE_CATEGORIES = frozenset({
    Category.FIRST_PARTY,
    Category.THIRD_PARTY,
    Category.SALE_SHARING,
    Category.SENSITIVE_DATA,
    Category.AUTOMATED_DECISIONS,
})

CONSENSUS_TYPES = ("unanimous", "majority", "expert_resolved")

#: Industry tags accepted without a warning. Free text beyond this list is
#: allowed but logged. Extend via validate_corpus(known_industries=...).
DEFAULT_INDUSTRIES = (
    "Big Tech",
    "AI/ML",
    "Financial Services",
    "Healthcare",
    "Surveillance/Defense",
    "Data Brokers",
    "Social Media",
    "Dating",
    "Travel",
    "Gaming",
    "E-commerce",
    "Telecommunications",
    "Media/Entertainment",
    "Enterprise Software",
)


class CorpusError(Exception):
    """Malformed corpus data that cannot be represented in the model."""


@dataclass(frozen=True)
class Company:
    name: str
    industry: str = ""
    external_verification: bool = False
    verification_citation: Optional[str] = None
    global_platform_infrastructure: bool = False

    def __post_init__(self):
        if not self.name:
            raise CorpusError("company name must be non-empty")
        if self.external_verification and not self.verification_citation:
            raise CorpusError(
                f"company {self.name!r}: external_verification requires a citation"
            )


@dataclass(frozen=True)
class AnnotationEntry:
    annotator_id: str
    primary: Category
    secondary: tuple[Category, ...] = ()


@dataclass(frozen=True)
class AnnotationSet:
    entries: tuple[AnnotationEntry, ...] = ()

    def __post_init__(self):
        ids = [e.annotator_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise CorpusError(f"duplicate annotator_id in annotation set: {ids}")

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class ConsensusLabel:
    primary: Category
    secondary: tuple[Category, ...] = ()
    consensus_type: str = "unanimous"

    def __post_init__(self):
        if self.consensus_type not in CONSENSUS_TYPES:
            raise CorpusError(f"unknown consensus_type {self.consensus_type!r}")


@dataclass(frozen=True)
class PolicySegment:
    segment_id: str
    company: Company
    heading_path: tuple[str, ...]
    text: str
    annotations: AnnotationSet = AnnotationSet()
    consensus: Optional[ConsensusLabel] = None
    flags: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict, compare=True)

    def __post_init__(self):
        if not self.segment_id:
            raise CorpusError("segment_id must be non-empty")
        if not self.heading_path:
            raise CorpusError(f"segment {self.segment_id}: heading_path is empty")
        if not self.text.strip():
            raise CorpusError(f"segment {self.segment_id}: text is empty")

    def with_consensus(self, consensus: Optional[ConsensusLabel],
                       flags: Optional[tuple[str, ...]] = None) -> "PolicySegment":
        return replace(self, consensus=consensus,
                       flags=self.flags if flags is None else flags)


@dataclass(frozen=True)
class Violation:
    segment_id: str
    kind: str
    message: str
    severity: str = "error"  # "error" breaks an invariant; "flag" is advisory


# Fields written for every record; anything else in a loaded record is kept
# under "extra" and re-emitted verbatim.
_KNOWN_FIELDS = {
    "company", "industry", "external_verification", "verification_citation",
    "global_platform_infrastructure", "segment_id", "heading_path", "text",
    "annotations", "consensus", "flags",
}


def _parse_category(token: str, line_no: int) -> Category:
    try:
        return Category(token)
    except ValueError:
        raise CorpusError(
            f"line {line_no}: unknown category token {token!r}"
        ) from None


def _segment_from_record(rec: dict, line_no: int,
                         companies: dict[str, Company]) -> PolicySegment:
    for key in ("company", "segment_id", "heading_path", "text"):
        if key not in rec:
            raise CorpusError(f"line {line_no}: missing field {key!r}")

    name = rec["company"]
    if name not in companies:
        companies[name] = Company(
            name=name,
            industry=rec.get("industry", ""),
            external_verification=bool(rec.get("external_verification", False)),
            verification_citation=rec.get("verification_citation"),
            global_platform_infrastructure=bool(
                rec.get("global_platform_infrastructure", False)),
        )
    company = companies[name]

    entries = tuple(
        AnnotationEntry(
            annotator_id=a["annotator_id"],
            primary=_parse_category(a["primary"], line_no),
            secondary=tuple(_parse_category(c, line_no)
                            for c in a.get("secondary", ())),
        )
        for a in rec.get("annotations", ())
    )

    consensus = None
    if rec.get("consensus"):
        c = rec["consensus"]
        consensus = ConsensusLabel(
            primary=_parse_category(c["primary"], line_no),
            secondary=tuple(_parse_category(t, line_no)
                            for t in c.get("secondary", ())),
            consensus_type=c.get("consensus_type", "unanimous"),
        )

    extra = {k: v for k, v in rec.items() if k not in _KNOWN_FIELDS}
    return PolicySegment(
        segment_id=rec["segment_id"],
        company=company,
        heading_path=tuple(rec["heading_path"]),
        text=rec["text"],
        annotations=AnnotationSet(entries),
        consensus=consensus,
        flags=tuple(rec.get("flags", ())),
        extra=extra,
    )


def load_corpus(path) -> list[PolicySegment]:
    """Load a JSONL corpus file, validating every record.

    Raises CorpusError naming the line number for malformed records,
    unknown category tokens, and duplicate segment ids.
    """
    path = Path(path)
    segments: list[PolicySegment] = []
    seen_ids: set[str] = set()
    companies: dict[str, Company] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            try:
                seg = _segment_from_record(rec, line_no, companies)
            except (KeyError, TypeError) as exc:
                raise CorpusError(f"line {line_no}: malformed record ({exc})") from None
            if seg.segment_id in seen_ids:
                raise CorpusError(
                    f"line {line_no}: duplicate segment_id {seg.segment_id!r}")
            seen_ids.add(seg.segment_id)
            segments.append(seg)
    return segments


def _segment_to_record(seg: PolicySegment) -> dict:
    rec = {
        "company": seg.company.name,
        "industry": seg.company.industry,
        "external_verification": seg.company.external_verification,
        "verification_citation": seg.company.verification_citation,
        "global_platform_infrastructure": seg.company.global_platform_infrastructure,
        "segment_id": seg.segment_id,
        "heading_path": list(seg.heading_path),
        "text": seg.text,
        "annotations": [
            {
                "annotator_id": e.annotator_id,
                "primary": e.primary.value,
                "secondary": [c.value for c in e.secondary],
            }
            for e in seg.annotations.entries
        ],
        "consensus": None,
        "flags": list(seg.flags),
    }
    if seg.consensus is not None:
        rec["consensus"] = {
            "primary": seg.consensus.primary.value,
            "secondary": [c.value for c in seg.consensus.secondary],
            "consensus_type": seg.consensus.consensus_type,
        }
    rec.update(seg.extra)
    return rec


def save_corpus(segments: Iterable[PolicySegment], path) -> None:
    """Write segments as JSONL. Output is byte-stable for a given corpus."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for seg in segments:
            fh.write(json.dumps(_segment_to_record(seg), sort_keys=True,
                                ensure_ascii=False))
            fh.write("\n")


def validate_corpus(segments: list[PolicySegment],
                    known_industries: Iterable[str] = DEFAULT_INDUSTRIES,
                    full_annotator_count: int = 3) -> list[Violation]:
    """Check corpus invariants.

    Returns a list of violations. Entries with severity "error" break a
    model invariant; entries with severity "flag" (e.g. incomplete
    annotation sets) are advisory and do not make the corpus invalid.
    """
    known = set(known_industries)
    out: list[Violation] = []
    seen_ids: set[str] = set()
    warned_industries: set[str] = set()
    for seg in segments:
        if seg.segment_id in seen_ids:
            out.append(Violation(seg.segment_id, "duplicate_id",
                                 "segment_id not unique within corpus"))
        seen_ids.add(seg.segment_id)

        for entry in seg.annotations.entries:
            if entry.primary in entry.secondary:
                out.append(Violation(
                    seg.segment_id, "secondary_contains_primary",
                    f"annotator {entry.annotator_id} lists primary "
                    f"{entry.primary.value} among secondary labels"))
        if seg.consensus and seg.consensus.primary in seg.consensus.secondary:
            out.append(Violation(
                seg.segment_id, "secondary_contains_primary",
                "consensus secondary list contains the primary label"))

        if seg.consensus and seg.consensus.consensus_type == "unanimous":
            primaries = {e.primary for e in seg.annotations.entries}
            if len(seg.annotations) and primaries != {seg.consensus.primary}:
                out.append(Violation(
                    seg.segment_id, "unanimous_mismatch",
                    "unanimous consensus but annotator primaries differ"))

        if len(seg.annotations) < full_annotator_count:
            out.append(Violation(
                seg.segment_id, "incomplete_annotation",
                f"only {len(seg.annotations)} of {full_annotator_count} "
                "annotator labels present", severity="flag"))

        industry = seg.company.industry
        if industry and industry not in known and industry not in warned_industries:
            warned_industries.add(industry)
            logger.warning("unknown industry tag %r (company %s)",
                           industry, seg.company.name)
    return out


def group_by_company(segments: Iterable[PolicySegment]
                     ) -> dict[str, list[PolicySegment]]:
    """Partition segments by company name, preserving document order."""
    groups: dict[str, list[PolicySegment]] = {}
    for seg in segments:
        groups.setdefault(seg.company.name, []).append(seg)
    return groups
