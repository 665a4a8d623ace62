"""Segment labeling: lexical baseline, remote-model clients, and consensus.

The lexical baseline is a deterministic cue-list classifier with an
ordered set of eight boundary rules resolving recurring category
ambiguities. It lets the whole pipeline run with zero network access; it
is not claimed to reproduce any remote ensemble's labels.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import requests

from .corpus import (AnnotationEntry, AnnotationSet, Category, ConsensusLabel,
                     PolicySegment, SUBSTANTIVE_CATEGORIES)
from .segmenter import LexiconEntry, load_lexicon, tag_jurisdiction

logger = logging.getLogger(__name__)

#: Tie-break ordering for primary label selection: practice-describing
#: categories outrank procedural and structural ones.
CATEGORY_PRECEDENCE = (
    Category.SALE_SHARING,
    Category.SENSITIVE_DATA,
    Category.AUTOMATED_DECISIONS,
    Category.THIRD_PARTY,
    Category.FIRST_PARTY,
    Category.TRACKING,
    Category.RETENTION,
    Category.SECURITY,
    Category.POLICY_CHANGE,
    Category.USER_CHOICE,
    Category.USER_ACCESS,
    Category.INTL_SPECIFIC,
    Category.REGIONAL,
    Category.OTHER,
)
_PRECEDENCE_RANK = {c: i for i, c in enumerate(CATEGORY_PRECEDENCE)}


def _phrase_pattern(cue: str) -> re.Pattern:
    return re.compile(r"(?<![A-Za-z])" + re.escape(cue) + r"(?![A-Za-z])",
                      re.IGNORECASE)


class CueConfig:
    """Cue lists backing the lexical baseline; loadable from JSON."""

    def __init__(self, raw: dict):
        self.raw = raw
        self.category_cues = {
            Category(cat): [(_phrase_pattern(c), c) for c in cues]
            for cat, cues in raw["categories"].items()
        }
        for key in ("assertion_cues", "procedural_cues", "platitude_cues",
                    "advice_cues", "hedge_cues", "euphemism_cues",
                    "collection_assertion_cues"):
            setattr(self, key, [(_phrase_pattern(c), c) for c in raw[key]])
        self.specificity_classes = {
            name: [(_phrase_pattern(c), c) for c in cues]
            for name, cues in raw["specificity_classes"].items()
        }

    @classmethod
    def load(cls, path=None) -> "CueConfig":
        if path is None:
            text = resources.files("policyaudit.data").joinpath(
                "category_cues.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls(json.loads(text))


_default_cues: Optional[CueConfig] = None


def default_cues() -> CueConfig:
    global _default_cues
    if _default_cues is None:
        _default_cues = CueConfig.load()
    return _default_cues


def _count_hits(text: str, patterns) -> int:
    return sum(1 for pat, _ in patterns if pat.search(text))


def _any_hit(text: str, patterns) -> bool:
    return any(pat.search(text) for pat, _ in patterns)


@dataclass(frozen=True)
class BoundaryRule:
    trigger_cues: tuple[str, ...]
    winner: Category
    loser: Category
    note: str
    mode: str = "force"       # "force": trigger => winner beats loser
    focus_threshold: int = 2  # "focus": winner needs this many distinct hits
    max_loser_hits: Optional[int] = None  # force only if loser hits <= this


def default_boundary_rules(cues: Optional[CueConfig] = None
                           ) -> tuple[BoundaryRule, ...]:
    """The eight boundary distinctions, in precedence order."""
    c = cues or default_cues()
    sale = tuple(t for _, t in c.category_cues[Category.SALE_SHARING])
    choice = tuple(t for _, t in c.category_cues[Category.USER_CHOICE])
    assertion = tuple(t for _, t in c.assertion_cues)
    intl = tuple(t for _, t in c.category_cues[Category.INTL_SPECIFIC])
    tracking = tuple(t for _, t in c.category_cues[Category.TRACKING])
    sensitive = tuple(t for _, t in c.category_cues[Category.SENSITIVE_DATA])
    advice = tuple(t for _, t in c.advice_cues)
    platitude = tuple(t for _, t in c.platitude_cues)
    return (
        BoundaryRule(sale, Category.SALE_SHARING, Category.THIRD_PARTY,
                     "sale terminology wins over operational sharing"),
        BoundaryRule(choice, Category.USER_CHOICE, Category.USER_ACCESS,
                     "preference/opt-out mechanisms win over data subject "
                     "rights verbs"),
        BoundaryRule(assertion, Category.FIRST_PARTY, Category.REGIONAL,
                     "practice-describing text in a regional section is "
                     "classified by substance"),
        BoundaryRule(intl, Category.INTL_SPECIFIC, Category.REGIONAL,
                     "children's privacy and transfers win over regional "
                     "rights procedures"),
        BoundaryRule(tracking, Category.TRACKING, Category.FIRST_PARTY,
                     "tracking-technology focus wins; incidental tracking "
                     "stays first-party", mode="focus"),
        BoundaryRule(sensitive, Category.SENSITIVE_DATA, Category.FIRST_PARTY,
                     "special-category focus wins; incidental sensitive "
                     "mentions stay first-party", mode="focus"),
        BoundaryRule(advice, Category.OTHER, Category.SECURITY,
                     "user-facing security advice is boilerplate",
                     max_loser_hits=1),
        BoundaryRule(platitude, Category.OTHER, Category.AUTOMATED_DECISIONS,
                     "AI platitudes without substantive disclosure are "
                     "boilerplate", max_loser_hits=1),
    )


def classify_lexical(segment: PolicySegment,
                     rules: Optional[tuple[BoundaryRule, ...]] = None,
                     cues: Optional[CueConfig] = None,
                     lexicon: Optional[list[LexiconEntry]] = None
                     ) -> tuple[Category, tuple[Category, ...]]:
    """Deterministic cue-based classification of one segment.

    Pure function of (segment text, heading path, rules, cue config).
    """
    c = cues or default_cues()
    rules = rules if rules is not None else default_boundary_rules(c)
    lexicon = lexicon if lexicon is not None else load_lexicon()
    text = segment.text

    scores: dict[Category, int] = {}
    for cat, patterns in c.category_cues.items():
        n = _count_hits(text, patterns)
        if n:
            scores[cat] = n

    # Regional candidacy comes from the heading path, not the body.
    scope = tag_jurisdiction(segment.heading_path, lexicon)
    if scope.kind != "universal" and _any_hit(text, c.procedural_cues):
        scores[Category.REGIONAL] = scores.get(Category.REGIONAL, 0) + 1

    demoted: set[Category] = set()
    trigger_index = {}

    def triggered(rule: BoundaryRule) -> bool:
        key = rule.trigger_cues
        if key not in trigger_index:
            trigger_index[key] = any(
                _phrase_pattern(cue).search(text) for cue in key)
        return trigger_index[key]

    for rule in rules:
        w, l = rule.winner, rule.loser
        if rule.mode == "force":
            if l in scores and triggered(rule):
                if rule.max_loser_hits is not None and \
                        scores.get(l, 0) > rule.max_loser_hits:
                    continue
                # Winner inherits at least the loser's standing so that the
                # rule actually flips the primary label.
                scores[w] = max(scores.get(w, 0), scores[l])
                demoted.add(l)
                demoted.discard(w)
        else:  # focus
            if w in scores and l in scores:
                if scores[w] >= rule.focus_threshold:
                    scores[l] = min(scores[l], scores[w] - 1)
                    demoted.add(l)
                else:
                    demoted.add(w)

    candidates = [cat for cat in scores if cat not in demoted]
    if not candidates:
        candidates = list(scores)
    if not candidates:
        return Category.OTHER, ()

    def rank(cat: Category):
        return (-scores[cat], _PRECEDENCE_RANK[cat])

    ordered = sorted(candidates, key=rank)
    primary = ordered[0]
    secondary = tuple(sorted(
        (cat for cat in scores if cat != primary),
        key=lambda cat: _PRECEDENCE_RANK[cat]))
    return primary, secondary


@dataclass(frozen=True)
class Annotator:
    annotator_id: str
    kind: str = "lexical_baseline"  # or "remote_model"
    endpoint: str = ""
    prompt_template_path: Optional[str] = None
    max_retries: int = 3
    timeout: float = 30.0
    auth_token_env: Optional[str] = None


class AnnotatorUnavailableError(Exception):
    """Remote annotator failed after all retries."""


class ResponseFormatError(Exception):
    """Remote annotator returned something other than the strict two-field
    {"primary": ..., "secondary": [...]} record."""


def _parse_remote_response(payload) -> tuple[Category, tuple[Category, ...]]:
    if not isinstance(payload, dict) or set(payload) != {"primary", "secondary"}:
        raise ResponseFormatError(f"expected two-field record, got {payload!r}")
    try:
        primary = Category(payload["primary"])
        secondary = tuple(Category(t) for t in payload["secondary"])
    except (ValueError, TypeError) as exc:
        raise ResponseFormatError(str(exc)) from None
    return primary, secondary


def classify_remote(segment: PolicySegment, annotator: Annotator,
                    session: Optional[requests.Session] = None,
                    retry_delay: float = 0.0
                    ) -> tuple[Category, tuple[Category, ...]]:
    """Classify a segment via a remote model endpoint.

    The prompt template is sent verbatim with the segment substituted in.
    Responses must be the strict two-field record; invalid responses are
    retried up to annotator.max_retries, never heuristically mined.
    """
    if annotator.kind != "remote_model":
        raise ValueError("classify_remote requires a remote_model annotator")
    prompt = ""
    if annotator.prompt_template_path:
        prompt = Path(annotator.prompt_template_path).read_text(encoding="utf-8")
    body = {
        "segment_id": segment.segment_id,
        "heading_path": list(segment.heading_path),
        "text": segment.text,
        "prompt": prompt,
    }
    sess = session or requests.Session()
    headers = {}
    if annotator.auth_token_env:
        import os
        token = os.environ.get(annotator.auth_token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    last_error: Optional[Exception] = None
    for attempt in range(annotator.max_retries + 1):
        if attempt and retry_delay:
            time.sleep(retry_delay)
        try:
            resp = sess.post(annotator.endpoint, json=body, headers=headers,
                             timeout=annotator.timeout)
            resp.raise_for_status()
            return _parse_remote_response(resp.json())
        except (requests.RequestException, ResponseFormatError,
                ValueError) as exc:
            last_error = exc
            logger.warning("annotator %s attempt %d failed: %s",
                           annotator.annotator_id, attempt + 1, exc)
    raise AnnotatorUnavailableError(
        f"annotator {annotator.annotator_id} failed after "
        f"{annotator.max_retries + 1} attempts: {last_error}")


def vote_consensus(entries: AnnotationSet) -> Optional[ConsensusLabel]:
    """Merge annotator labels by majority vote.

    Returns None for disputed sets (no strict plurality of >= 2).
    Secondary consensus is the set of categories appearing in at least two
    entries' secondary lists. Symmetric in annotator order.
    """
    if len(entries) < 2:
        raise ValueError("consensus requires at least 2 annotations")
    primaries = [e.primary for e in entries.entries]
    counts: dict[Category, int] = {}
    for p in primaries:
        counts[p] = counts.get(p, 0) + 1
    top_n = max(counts.values())
    leaders = [cat for cat, n in counts.items() if n == top_n]

    if top_n == len(primaries):
        consensus_type = "unanimous"
    elif top_n >= 2 and len(leaders) == 1:
        consensus_type = "majority"
    else:
        return None

    primary = leaders[0]
    sec_counts: dict[Category, int] = {}
    for e in entries.entries:
        for cat in set(e.secondary):
            sec_counts[cat] = sec_counts.get(cat, 0) + 1
    secondary = tuple(sorted(
        (cat for cat, n in sec_counts.items() if n >= 2 and cat != primary),
        key=lambda cat: _PRECEDENCE_RANK[cat]))
    return ConsensusLabel(primary=primary, secondary=secondary,
                          consensus_type=consensus_type)


DISPUTED_FLAG = "disputed"


def apply_votes(segments: Iterable[PolicySegment]) -> list[PolicySegment]:
    """Attach consensus labels to every segment with >= 2 annotations.

    Disputed segments keep consensus=None and gain a "disputed" flag.
    """
    out = []
    for seg in segments:
        if len(seg.annotations) < 2:
            out.append(seg)
            continue
        consensus = vote_consensus(seg.annotations)
        if consensus is None:
            flags = seg.flags if DISPUTED_FLAG in seg.flags else \
                seg.flags + (DISPUTED_FLAG,)
            out.append(seg.with_consensus(None, flags))
        else:
            flags = tuple(f for f in seg.flags if f != DISPUTED_FLAG)
            out.append(seg.with_consensus(consensus, flags))
    return out


def parse_resolution_file(path) -> dict[str, tuple[Category, tuple[Category, ...]]]:
    """Parse ``segment_id<TAB>PRIMARY<TAB>sec1,sec2`` lines."""
    resolutions = {}
    for line_no, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise ValueError(f"resolution line {line_no}: expected 2 or 3 "
                             "tab-separated fields")
        seg_id, primary = parts[0], Category(parts[1])
        secondary = ()
        if len(parts) == 3 and parts[2]:
            secondary = tuple(Category(t) for t in parts[2].split(","))
        resolutions[seg_id] = (primary, secondary)
    return resolutions


def resolve_disputes(segments: list[PolicySegment],
                     resolutions: dict[str, tuple[Category, tuple[Category, ...]]]
                     ) -> list[PolicySegment]:
    """Apply expert resolutions to disputed segments.

    Resolutions for non-disputed segments are ignored with a warning;
    resolutions targeting unknown segment ids are warned about too.
    Unresolved disputes stay flagged.
    """
    known = {seg.segment_id for seg in segments}
    for seg_id in resolutions:
        if seg_id not in known:
            logger.warning("resolution targets unknown segment_id %r", seg_id)
    out = []
    for seg in segments:
        res = resolutions.get(seg.segment_id)
        if res is None:
            out.append(seg)
            continue
        if DISPUTED_FLAG not in seg.flags:
            logger.warning("resolution for non-disputed segment %r ignored",
                           seg.segment_id)
            out.append(seg)
            continue
        primary, secondary = res
        consensus = ConsensusLabel(primary=primary, secondary=secondary,
                                   consensus_type="expert_resolved")
        flags = tuple(f for f in seg.flags if f != DISPUTED_FLAG)
        out.append(seg.with_consensus(consensus, flags))
    return out


def annotate_lexically(segments: Iterable[PolicySegment],
                       annotator_id: str = "lexical-baseline",
                       cues: Optional[CueConfig] = None,
                       lexicon: Optional[list[LexiconEntry]] = None
                       ) -> list[PolicySegment]:
    """Run the lexical baseline over a corpus, appending one annotation."""
    c = cues or default_cues()
    lex = lexicon if lexicon is not None else load_lexicon()
    rules = default_boundary_rules(c)
    out = []
    for seg in segments:
        primary, secondary = classify_lexical(seg, rules, c, lex)
        entry = AnnotationEntry(annotator_id=annotator_id, primary=primary,
                                secondary=secondary)
        entries = seg.annotations.entries + (entry,)
        out.append(PolicySegment(
            segment_id=seg.segment_id, company=seg.company,
            heading_path=seg.heading_path, text=seg.text,
            annotations=AnnotationSet(entries), consensus=seg.consensus,
            flags=seg.flags, extra=seg.extra))
    return out
