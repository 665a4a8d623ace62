"""Quantitative audit outputs: prevalence, category and industry tables,
tier totals, rankings, sensitivity analyses, and coverage comparison."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

from .corpus import (Category, Company, PolicySegment, SUBSTANTIVE_CATEGORIES,
                     group_by_company)
from .detector import SiloedInstance, TIERS, _segment_scope
from .reliability import wilson_interval
from .segmenter import LexiconEntry, load_lexicon

CONSERVATIVE_CATEGORIES = frozenset({Category.FIRST_PARTY,
                                     Category.THIRD_PARTY})

_CATEGORY_ORDER = (Category.FIRST_PARTY, Category.SALE_SHARING,
                   Category.THIRD_PARTY, Category.SENSITIVE_DATA,
                   Category.AUTOMATED_DECISIONS)


class ReportConsistencyError(Exception):
    """An internal consistency assertion failed; the report is not emitted."""


@dataclass(frozen=True)
class IndustryRow:
    industry: str
    affected: int
    total: int
    proportion: float
    ci: tuple[float, float]


@dataclass(frozen=True)
class AuditReport:
    total_instances: int
    affected_companies: int
    sample_size: int
    prevalence: float
    prevalence_ci: tuple[float, float]
    ci_variant: str
    category_table: dict[Category, tuple[int, int, int]]
    industry_table: tuple[IndustryRow, ...]
    tier_totals: dict[str, int]
    explicit_implied: tuple[int, int]

    def check(self) -> None:
        cat_total = sum(t for _, _, t in self.category_table.values())
        if cat_total != self.total_instances:
            raise ReportConsistencyError(
                f"category totals sum to {cat_total}, "
                f"expected {self.total_instances}")
        tier_total = sum(self.tier_totals.values())
        if tier_total != self.total_instances:
            raise ReportConsistencyError(
                f"tier totals sum to {tier_total}, "
                f"expected {self.total_instances}")
        if sum(self.explicit_implied) != self.total_instances:
            raise ReportConsistencyError("explicit/implied split does not "
                                         "sum to the instance count")
        if self.sample_size and \
                self.prevalence != self.affected_companies / self.sample_size:
            raise ReportConsistencyError("prevalence is not exactly "
                                         "affected/sample")


def _corpus_companies(segments: Iterable[PolicySegment],
                      company_meta: Optional[dict[str, Company]]
                      ) -> dict[str, Company]:
    companies = {}
    for seg in segments:
        companies.setdefault(seg.company.name, seg.company)
    if company_meta:
        companies.update({k: v for k, v in company_meta.items()
                          if k in companies})
    return companies


def build_report(instances: list[SiloedInstance],
                 corpus: list[PolicySegment],
                 company_meta: Optional[dict[str, Company]] = None,
                 ci_variant: str = "uncorrected",
                 confidence: float = 0.95) -> AuditReport:
    """Aggregate detector output into the full audit report.

    Consistency assertions are re-checked on every build; a report that
    fails them is never returned.
    """
    if ci_variant not in ("uncorrected", "corrected"):
        raise ValueError(f"unknown ci variant {ci_variant!r}")
    companies = _corpus_companies(corpus, company_meta)
    for inst in instances:
        if inst.company not in companies:
            raise ValueError(f"instance references unknown company "
                             f"{inst.company!r}")

    affected = sorted({inst.company for inst in instances})
    sample_size = len(companies)
    prevalence = len(affected) / sample_size if sample_size else 0.0
    ci = wilson_interval(len(affected), sample_size, confidence,
                         corrected=(ci_variant == "corrected")) \
        if sample_size else (0.0, 0.0)

    category_table: dict[Category, tuple[int, int, int]] = {}
    for cat in _CATEGORY_ORDER:
        reg = sum(1 for i in instances
                  if i.category == cat and i.scope_class == "regional_us")
        intl = sum(1 for i in instances
                   if i.category == cat and i.scope_class == "international")
        category_table[cat] = (reg, intl, reg + intl)

    tier_totals = {tier: sum(1 for i in instances if i.tier == tier)
                   for tier in TIERS}
    explicit = sum(1 for i in instances if i.explicitness == "explicit")
    implied = len(instances) - explicit

    by_industry: dict[str, list[str]] = {}
    for name, company in companies.items():
        by_industry.setdefault(company.industry or "(untagged)", []).append(name)
    rows = []
    affected_set = set(affected)
    for industry in sorted(by_industry):
        members = by_industry[industry]
        hit = sum(1 for name in members if name in affected_set)
        rows.append(IndustryRow(
            industry=industry, affected=hit, total=len(members),
            proportion=hit / len(members),
            ci=wilson_interval(hit, len(members), confidence,
                               corrected=(ci_variant == "corrected"))))

    report = AuditReport(
        total_instances=len(instances),
        affected_companies=len(affected),
        sample_size=sample_size,
        prevalence=prevalence,
        prevalence_ci=ci,
        ci_variant=ci_variant,
        category_table=category_table,
        industry_table=tuple(rows),
        tier_totals=tier_totals,
        explicit_implied=(explicit, implied),
    )
    report.check()
    return report


def sensitivity_exclude(instances: list[SiloedInstance],
                        corpus: list[PolicySegment],
                        company_name: str,
                        company_meta: Optional[dict[str, Company]] = None,
                        ci_variant: str = "uncorrected") -> AuditReport:
    """Rebuild the report with one company removed from the sample.

    Non-destructive: inputs are untouched, so re-inclusion reproduces the
    original report.
    """
    names = {seg.company.name for seg in corpus}
    if company_name not in names:
        raise ValueError(f"unknown company {company_name!r}")
    reduced_corpus = [s for s in corpus if s.company.name != company_name]
    reduced = [i for i in instances if i.company != company_name]
    return build_report(reduced, reduced_corpus, company_meta, ci_variant)


def conservative_estimate(instances: list[SiloedInstance],
                          corpus: list[PolicySegment],
                          company_meta: Optional[dict[str, Company]] = None,
                          ci_variant: str = "uncorrected",
                          categories: frozenset = CONSERVATIVE_CATEGORIES
                          ) -> AuditReport:
    """Report restricted to externally validated practice categories."""
    filtered = [i for i in instances if i.category in categories]
    return build_report(filtered, corpus, company_meta, ci_variant)


def per_segment_rate(corpus: list[PolicySegment],
                     instances: list[SiloedInstance],
                     group_predicate: Callable[[Company], bool]
                     ) -> tuple[Optional[float], Optional[float]]:
    """Siloed-contributing segments per segment, inside vs outside a
    company group. Empty groups yield None for the undefined side."""
    contributing = {sid for inst in instances
                    for sid in inst.contributing_segment_ids}
    in_total = in_hit = out_total = out_hit = 0
    for seg in corpus:
        if group_predicate(seg.company):
            in_total += 1
            in_hit += seg.segment_id in contributing
        else:
            out_total += 1
            out_hit += seg.segment_id in contributing
    rate_in = in_hit / in_total if in_total else None
    rate_out = out_hit / out_total if out_total else None
    return rate_in, rate_out


@dataclass(frozen=True)
class CoverageGroup:
    name: str  # no_regional | procedural_only | siloed
    companies: tuple[str, ...]
    mean_coverage: float
    full_coverage_share: float


def coverage_comparison(corpus: list[PolicySegment],
                        instances: list[SiloedInstance],
                        lexicon: Optional[list[LexiconEntry]] = None
                        ) -> dict[str, CoverageGroup]:
    """Mean substantive-category coverage per company group.

    Groups: companies without regional sections, companies whose regional
    sections are procedural only, and companies with siloed disclosures.
    Coverage counts the substantive categories disclosed anywhere in the
    policy (0..5).
    """
    lex = lexicon if lexicon is not None else load_lexicon()
    groups = group_by_company(corpus)
    siloed_companies = {inst.company for inst in instances}

    assignment: dict[str, str] = {}
    coverage: dict[str, int] = {}
    for name, segs in groups.items():
        has_regional = any(_segment_scope(seg, lex).kind != "universal"
                           for seg in segs)
        if name in siloed_companies:
            assignment[name] = "siloed"
        elif has_regional:
            assignment[name] = "procedural_only"
        else:
            assignment[name] = "no_regional"
        cats = set()
        for seg in segs:
            if seg.consensus is not None:
                cats |= ({seg.consensus.primary, *seg.consensus.secondary}
                         & SUBSTANTIVE_CATEGORIES)
        coverage[name] = len(cats)

    out = {}
    for group_name in ("no_regional", "procedural_only", "siloed"):
        members = tuple(sorted(n for n, g in assignment.items()
                               if g == group_name))
        if not members:
            out[group_name] = CoverageGroup(group_name, (), 0.0, 0.0)
            continue
        covs = [coverage[n] for n in members]
        out[group_name] = CoverageGroup(
            name=group_name, companies=members,
            mean_coverage=sum(covs) / len(covs),
            full_coverage_share=sum(1 for v in covs
                                    if v == len(SUBSTANTIVE_CATEGORIES))
            / len(covs))
    return out


@dataclass(frozen=True)
class RankingRow:
    company: str
    instance_count: int
    verification_mark: str  # "verified" | "platform" | "-"
    categories: tuple[Category, ...]


def company_ranking(instances: list[SiloedInstance],
                    company_meta: Optional[dict[str, Company]] = None
                    ) -> list[RankingRow]:
    """Companies ordered by descending instance count, ties alphabetical."""
    counts: dict[str, int] = {}
    cats: dict[str, set] = {}
    for inst in instances:
        counts[inst.company] = counts.get(inst.company, 0) + 1
        cats.setdefault(inst.company, set()).add(inst.category)
    rows = []
    for name in sorted(counts, key=lambda n: (-counts[n], n)):
        company = (company_meta or {}).get(name)
        if company is not None and company.external_verification:
            mark = "verified"
        elif company is not None and company.global_platform_infrastructure:
            mark = "platform"
        else:
            mark = "-"
        rows.append(RankingRow(
            company=name, instance_count=counts[name],
            verification_mark=mark,
            categories=tuple(sorted(cats[name], key=lambda c: c.value))))
    return rows


def _fmt_pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def render_text(report: AuditReport) -> str:
    """Human-readable aligned table rendering."""
    lines = []
    lines.append("Siloed disclosure audit")
    lines.append("=" * 50)
    lines.append(f"Instances:           {report.total_instances}")
    lines.append(f"Affected companies:  {report.affected_companies} of "
                 f"{report.sample_size} ({_fmt_pct(report.prevalence)})")
    lo, hi = report.prevalence_ci
    lines.append(f"95% Wilson CI:       {_fmt_pct(lo)} - {_fmt_pct(hi)} "
                 f"({report.ci_variant})")
    ex, im = report.explicit_implied
    lines.append(f"Explicit / implied:  {ex} / {im}")
    lines.append("")
    lines.append(f"{'Category':<22}{'US-regional':>12}{'Intl.':>8}{'Total':>8}")
    for cat, (reg, intl, total) in report.category_table.items():
        lines.append(f"{cat.value:<22}{reg:>12}{intl:>8}{total:>8}")
    lines.append("")
    lines.append(f"{'Tier':<22}{'Count':>8}")
    for tier, n in report.tier_totals.items():
        lines.append(f"{tier:<22}{n:>8}")
    lines.append("")
    lines.append(f"{'Industry':<24}{'Affected':>10}{'Rate':>8}  95% CI")
    for row in report.industry_table:
        lo, hi = row.ci
        lines.append(f"{row.industry:<24}{f'{row.affected}/{row.total}':>10}"
                     f"{_fmt_pct(row.proportion):>8}  "
                     f"{_fmt_pct(lo)}-{_fmt_pct(hi)}")
    return "\n".join(lines) + "\n"


def render_csv(report: AuditReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["section", "key", "regional_us", "international",
                     "total", "extra"])
    writer.writerow(["summary", "instances", "", "",
                     report.total_instances, ""])
    writer.writerow(["summary", "affected_companies", "", "",
                     report.affected_companies, report.sample_size])
    writer.writerow(["summary", "prevalence", "", "", report.prevalence,
                     f"{report.prevalence_ci[0]}:{report.prevalence_ci[1]}"])
    for cat, (reg, intl, total) in report.category_table.items():
        writer.writerow(["category", cat.value, reg, intl, total, ""])
    for tier, n in report.tier_totals.items():
        writer.writerow(["tier", tier, "", "", n, ""])
    for row in report.industry_table:
        writer.writerow(["industry", row.industry, "", "",
                         f"{row.affected}/{row.total}",
                         f"{row.ci[0]}:{row.ci[1]}"])
    return buf.getvalue()


def to_record(report: AuditReport) -> dict:
    return {
        "total_instances": report.total_instances,
        "affected_companies": report.affected_companies,
        "sample_size": report.sample_size,
        "prevalence": report.prevalence,
        "prevalence_ci": list(report.prevalence_ci),
        "ci_variant": report.ci_variant,
        "category_table": {cat.value: list(v)
                           for cat, v in report.category_table.items()},
        "tier_totals": report.tier_totals,
        "explicit_implied": list(report.explicit_implied),
        "industry_table": [
            {"industry": r.industry, "affected": r.affected,
             "total": r.total, "proportion": r.proportion,
             "ci": list(r.ci)}
            for r in report.industry_table],
    }


def write_report(report: AuditReport, out_dir) -> dict[str, Path]:
    """Emit the text, CSV, and JSON renderings of a report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "text": out_dir / "report.txt",
        "csv": out_dir / "report.csv",
        "json": out_dir / "report.json",
    }
    paths["text"].write_text(render_text(report), encoding="utf-8")
    paths["csv"].write_text(render_csv(report), encoding="utf-8")
    paths["json"].write_text(
        json.dumps(to_record(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return paths
