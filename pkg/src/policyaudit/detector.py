"""Jurisdiction-siloed disclosure detection.

A disclosure is siloed when a substantive category appears (as primary or
secondary consensus label) in a jurisdiction-scoped segment without an
equivalent disclosure in any universal segment of the same policy. The
rule is conservative: any labeled universal disclosure of the category
that survives the equivalence criteria suppresses the finding.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

from .classifier import CueConfig, default_cues
from .corpus import (Category, Company, PolicySegment, SUBSTANTIVE_CATEGORIES,
                     group_by_company)
from .segmenter import (JurisdictionScope, LexiconEntry, load_lexicon,
                        tag_jurisdiction)

logger = logging.getLogger(__name__)

TIERS = ("verified", "strongly_inferred", "moderately_inferred",
         "weakly_inferred")

INTL_SPECIAL_SCOPE = JurisdictionScope(kind="children_or_transfer_special",
                                       label="International")

#: Per-category first-person practice assertion cues; their presence in a
#: contributing segment makes an instance "explicit" rather than "implied".
_EXPLICITNESS_CUES = {
    Category.SALE_SHARING: ("we sell", "we may sell", "we have sold",
                            "we also sell"),
    Category.FIRST_PARTY: ("we collect", "we may collect", "we gather",
                           "we obtain", "we receive", "we have collected"),
    Category.THIRD_PARTY: ("we share", "we may share", "we disclose",
                           "we transfer", "we have shared", "we provide"),
    Category.SENSITIVE_DATA: ("we collect", "we may collect", "we process",
                              "we use", "we have collected"),
    Category.AUTOMATED_DECISIONS: ("we use", "we make", "we process",
                                   "we rely on", "we employ"),
}


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    failed_criterion: Optional[str] = None  # practice_identity | specificity
                                            # | semantic_clarity
    matched_universal_segment: Optional[str] = None
    needs_review: bool = False


@dataclass(frozen=True)
class SiloedInstance:
    company: str
    category: Category
    regional_segment_id: str
    jurisdiction: JurisdictionScope
    scope_class: str          # regional_us | international
    explicitness: str         # explicit | implied
    tier: str
    evidence: tuple[str, ...]
    contributing_segment_ids: tuple[str, ...] = ()
    foundational_collection: bool = False


def _phrase_in(text: str, phrase: str) -> bool:
    return phrase.lower() in text.lower()


def _consensus_categories(seg: PolicySegment) -> set[Category]:
    if seg.consensus is None:
        return set()
    return {seg.consensus.primary, *seg.consensus.secondary}


def _specificity_classes(text: str, cues: CueConfig) -> set[str]:
    return {name for name, patterns in cues.specificity_classes.items()
            if any(pat.search(text) for pat, _ in patterns)}


def equivalence_check(regional_segment: PolicySegment,
                      universal_segments: Iterable[PolicySegment],
                      category: Category,
                      cues: Optional[CueConfig] = None,
                      strict_clarity: bool = False) -> EquivalenceVerdict:
    """Decide whether universal segments equivalently disclose ``category``.

    Criteria, in order: practice identity (some universal segment carries
    the category as primary or secondary label; the taxonomy itself
    encodes the sale-vs-sharing distinction), specificity (specific-
    practice cues in the regional text must be matched by a same-class cue
    in a category-matching universal segment), and semantic clarity
    (euphemism-flagged matches are routed to human review; the default is
    to accept them pending review, strict mode rejects them). Hedged
    universal language counts as equivalent.
    """
    if category not in SUBSTANTIVE_CATEGORIES:
        raise ValueError(f"{category.value} is not a substantive category")
    c = cues or default_cues()

    candidates = [seg for seg in universal_segments
                  if category in _consensus_categories(seg)]
    if not candidates:
        return EquivalenceVerdict(False, "practice_identity")

    needed = _specificity_classes(regional_segment.text, c)
    if needed:
        matching = [seg for seg in candidates
                    if needed <= _specificity_classes(seg.text, c)]
        if not matching:
            return EquivalenceVerdict(False, "specificity")
        candidates = matching

    clear = [seg for seg in candidates
             if not any(pat.search(seg.text) for pat, _ in c.euphemism_cues)]
    if clear:
        return EquivalenceVerdict(True, None, clear[0].segment_id)
    # Only euphemism-flagged matches remain: human-review territory.
    if strict_clarity:
        return EquivalenceVerdict(False, "semantic_clarity",
                                  needs_review=True)
    return EquivalenceVerdict(True, None, candidates[0].segment_id,
                              needs_review=True)


def classify_explicitness(segments: Iterable[PolicySegment],
                          category: Category) -> str:
    """Explicit iff any contributing segment asserts the practice in the
    first person; implied when only rights/procedural language supports it."""
    cues = _EXPLICITNESS_CUES.get(category, ())
    for seg in segments:
        if any(_phrase_in(seg.text, cue) for cue in cues):
            return "explicit"
    return "implied"


def assign_tier(instance: SiloedInstance, company: Company) -> str:
    if company.external_verification:
        return "verified"
    transfer_pattern = (instance.category in
                        (Category.FIRST_PARTY, Category.THIRD_PARTY)
                        and instance.scope_class == "international")
    if transfer_pattern or company.global_platform_infrastructure:
        return "strongly_inferred"
    if instance.category in (Category.AUTOMATED_DECISIONS,
                             Category.SENSITIVE_DATA) or \
            instance.foundational_collection:
        return "moderately_inferred"
    return "weakly_inferred"


def _segment_scope(seg: PolicySegment,
                   lexicon: list[LexiconEntry]) -> JurisdictionScope:
    scope = tag_jurisdiction(seg.heading_path, lexicon)
    if scope.kind != "universal":
        return scope
    # Universal heading path but the segment itself is an international-
    # transfer/children's-privacy section housing substantive secondaries:
    # counts as international scope.
    if seg.consensus is not None and \
            seg.consensus.primary == Category.INTL_SPECIFIC and \
            any(c in SUBSTANTIVE_CATEGORIES for c in seg.consensus.secondary):
        return INTL_SPECIAL_SCOPE
    return scope


def _scope_class(scope: JurisdictionScope) -> str:
    if scope.kind == "us_state":
        return "regional_us"
    return "international"  # non_us and children_or_transfer_special


def _excerpt(text: str, limit: int = 240) -> str:
    return text if len(text) <= limit else text[:limit - 1] + "…"


def find_siloed(company_segments: Iterable[PolicySegment],
                lexicon: Optional[list[LexiconEntry]] = None,
                company_meta: Optional[dict[str, Company]] = None,
                cues: Optional[CueConfig] = None,
                strict_clarity: bool = False,
                categories: Optional[Iterable[Category]] = None
                ) -> list[SiloedInstance]:
    """Detect siloed disclosures; one instance per (company, category,
    jurisdiction label), evidence from every contributing segment.

    Output is deterministic and independent of input segment order within
    a company (companies and instances are emitted in sorted order).
    """
    lex = lexicon if lexicon is not None else load_lexicon()
    c = cues or default_cues()
    wanted = (frozenset(categories) if categories is not None
              else SUBSTANTIVE_CATEGORIES)

    groups = group_by_company(company_segments)
    instances: list[SiloedInstance] = []
    for name in sorted(groups):
        segs = groups[name]
        company = (company_meta or {}).get(name, segs[0].company)

        scoped = [(seg, _segment_scope(seg, lex)) for seg in segs]
        universal = [seg for seg, scope in scoped
                     if scope.kind == "universal" and seg.consensus is not None]
        regional = [(seg, scope) for seg, scope in scoped
                    if scope.kind != "universal"]

        # One bucket per (category, jurisdiction label); multiple regional
        # segments with the same pair collapse into one instance.
        buckets: dict[tuple[Category, str],
                      tuple[JurisdictionScope, list[PolicySegment]]] = {}
        for seg, scope in regional:
            if seg.consensus is None:
                logger.warning("segment %s has no consensus label; skipped",
                               seg.segment_id)
                continue
            for cat in sorted(_consensus_categories(seg) & wanted,
                              key=lambda x: x.value):
                key = (cat, scope.label)
                if key not in buckets:
                    buckets[key] = (scope, [])
                buckets[key][1].append(seg)

        for (cat, label), (scope, contributing) in sorted(
                buckets.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
            contributing = sorted(contributing, key=lambda s: s.segment_id)
            verdicts = [equivalence_check(seg, universal, cat, c,
                                          strict_clarity)
                        for seg in contributing]
            if all(v.equivalent for v in verdicts):
                continue
            inst = SiloedInstance(
                company=name,
                category=cat,
                regional_segment_id=contributing[0].segment_id,
                jurisdiction=scope,
                scope_class=_scope_class(scope),
                explicitness=classify_explicitness(contributing, cat),
                tier="weakly_inferred",
                evidence=tuple(_excerpt(s.text) for s in contributing),
                contributing_segment_ids=tuple(
                    s.segment_id for s in contributing),
                foundational_collection=(
                    cat == Category.FIRST_PARTY and any(
                        any(pat.search(s.text)
                            for pat, _ in c.collection_assertion_cues)
                        for s in contributing)),
            )
            tier = assign_tier(inst, company)
            if inst.foundational_collection and \
                    tier == "moderately_inferred" and \
                    cat == Category.FIRST_PARTY:
                logger.info("foundational-collection tier assignment: "
                            "%s / %s / %s", name, cat.value, label)
            instances.append(replace(inst, tier=tier))
    return instances


def load_company_meta(path) -> dict[str, Company]:
    """Load JSONL company metadata records keyed by company name."""
    meta = {}
    for line_no, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        company = Company(
            name=rec["name"],
            industry=rec.get("industry", ""),
            external_verification=bool(rec.get("external_verification", False)),
            verification_citation=rec.get("verification_citation"),
            global_platform_infrastructure=bool(
                rec.get("global_platform_infrastructure", False)),
        )
        meta[company.name] = company
    return meta


def save_instances(instances: Iterable[SiloedInstance], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps({
                "company": inst.company,
                "category": inst.category.value,
                "regional_segment_id": inst.regional_segment_id,
                "jurisdiction_kind": inst.jurisdiction.kind,
                "jurisdiction_label": inst.jurisdiction.label,
                "jurisdiction_cue": inst.jurisdiction.matched_cue,
                "scope_class": inst.scope_class,
                "explicitness": inst.explicitness,
                "tier": inst.tier,
                "evidence": list(inst.evidence),
                "contributing_segment_ids": list(inst.contributing_segment_ids),
                "foundational_collection": inst.foundational_collection,
            }, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def load_instances(path) -> list[SiloedInstance]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        out.append(SiloedInstance(
            company=rec["company"],
            category=Category(rec["category"]),
            regional_segment_id=rec["regional_segment_id"],
            jurisdiction=JurisdictionScope(
                kind=rec["jurisdiction_kind"],
                label=rec["jurisdiction_label"],
                matched_cue=rec.get("jurisdiction_cue", "")),
            scope_class=rec["scope_class"],
            explicitness=rec["explicitness"],
            tier=rec["tier"],
            evidence=tuple(rec["evidence"]),
            contributing_segment_ids=tuple(
                rec.get("contributing_segment_ids", ())),
            foundational_collection=rec.get("foundational_collection", False),
        ))
    return out
