"""Agreement and uncertainty statistics for labeled corpora.

Pairwise agreement, consensus distribution, Fleiss' and Cohen's kappa,
reference-corpus validation, and Wilson score intervals (standard and
continuity-corrected). All functions are pure and stateless.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Optional, Sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConsensusDistribution:
    unanimous: float
    majority: float
    disputed: float
    n_counted: int
    n_excluded: int

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.unanimous, self.majority, self.disputed)


@dataclass(frozen=True)
class AgreementReport:
    n_items: int
    unanimous_rate: float
    majority_rate: float
    disputed_rate: float
    pairwise: dict[tuple[str, str], float]
    fleiss_kappa: float


@dataclass(frozen=True)
class ReferenceValidation:
    cohen_kappa: float
    accuracy_overall: float
    accuracy_on_unanimous: Optional[float]
    accuracy_on_disputed: Optional[float]


def pairwise_agreement(labels: Mapping[str, Sequence[Hashable]]
                       ) -> dict[tuple[str, str], float]:
    """Proportion of items on which each unordered annotator pair agrees."""
    lengths = {len(v) for v in labels.values()}
    if len(lengths) > 1:
        raise ValueError(f"label vectors differ in length: {sorted(lengths)}")
    if not lengths or lengths == {0}:
        raise ValueError("label vectors must contain at least one item")
    out = {}
    for a, b in combinations(sorted(labels), 2):
        va, vb = labels[a], labels[b]
        out[(a, b)] = sum(x == y for x, y in zip(va, vb)) / len(va)
    return out


def _vote_type(primaries: Sequence[Hashable]) -> str:
    counts = Counter(primaries)
    top, top_n = counts.most_common(1)[0]
    if top_n == len(primaries):
        return "unanimous"
    if top_n >= 2 and sum(1 for c in counts.values() if c == top_n) == 1:
        return "majority"
    return "disputed"


def consensus_distribution(segments) -> ConsensusDistribution:
    """Distribution of agreement types over fully annotated segments.

    Segments without a full 3-annotator set are excluded from the
    proportions and reported via n_excluded.
    """
    counts = Counter()
    excluded = 0
    for seg in segments:
        if len(seg.annotations) < 3:
            excluded += 1
            continue
        counts[_vote_type([e.primary for e in seg.annotations.entries])] += 1
    n = sum(counts.values())
    if n == 0:
        return ConsensusDistribution(0.0, 0.0, 0.0, 0, excluded)
    return ConsensusDistribution(
        counts["unanimous"] / n, counts["majority"] / n,
        counts["disputed"] / n, n, excluded)


def fleiss_kappa(labels: Sequence[Sequence[Hashable]]) -> float:
    """Multi-rater chance-corrected agreement.

    ``labels`` is an items x raters matrix of category assignments; every
    item must carry the same number of ratings (>= 2).
    """
    if not labels:
        raise ValueError("at least one item required")
    n_raters = {len(row) for row in labels}
    if len(n_raters) != 1:
        raise ValueError("all items must have the same number of raters")
    n = n_raters.pop()
    if n < 2:
        raise ValueError("at least two raters required")

    total = Counter()
    p_bar = 0.0
    for row in labels:
        counts = Counter(row)
        total.update(counts)
        p_bar += (sum(c * c for c in counts.values()) - n) / (n * (n - 1))
    p_bar /= len(labels)

    grand = len(labels) * n
    p_e = sum((c / grand) ** 2 for c in total.values())
    if math.isclose(p_e, 1.0):
        # All raters used a single category throughout; agreement is perfect
        # but the statistic is undefined. Defined as 1.0 by convention.
        logger.info("fleiss_kappa: expected agreement is 1; returning 1.0")
        return 1.0
    return (p_bar - p_e) / (1 - p_e)


def cohens_kappa(pred: Sequence[Hashable], ref: Sequence[Hashable]) -> float:
    """Chance-corrected agreement between two label vectors."""
    if len(pred) != len(ref):
        raise ValueError("vectors must have equal length")
    if not pred:
        raise ValueError("vectors must be non-empty")
    n = len(pred)
    p_o = sum(a == b for a, b in zip(pred, ref)) / n
    cp, cr = Counter(pred), Counter(ref)
    p_e = sum((cp[k] / n) * (cr[k] / n) for k in set(cp) | set(cr))
    if math.isclose(p_e, 1.0):
        result = 1.0 if math.isclose(p_o, 1.0) else 0.0
        logger.info("cohens_kappa: expected agreement is 1; returning %s", result)
        return result
    return (p_o - p_e) / (1 - p_e)


def reference_validation(pred: Sequence[Hashable], ref: Sequence[Hashable],
                         ref_consensus_types: Optional[Sequence[str]] = None
                         ) -> ReferenceValidation:
    """Accuracy against a reference corpus, split by whether the reference
    item was unanimous among its original annotators."""
    if len(pred) != len(ref):
        raise ValueError("vectors must have equal length")
    kappa = cohens_kappa(pred, ref)
    matches = [a == b for a, b in zip(pred, ref)]
    overall = sum(matches) / len(matches)

    acc_unanimous = acc_disputed = None
    if ref_consensus_types is None:
        logger.warning("reference_validation: no consensus-type metadata; "
                       "unanimous/disputed split omitted")
    else:
        if len(ref_consensus_types) != len(ref):
            raise ValueError("consensus-type vector length mismatch")
        unam = [m for m, t in zip(matches, ref_consensus_types)
                if t == "unanimous"]
        disp = [m for m, t in zip(matches, ref_consensus_types)
                if t != "unanimous"]
        if unam:
            acc_unanimous = sum(unam) / len(unam)
        if disp:
            acc_disputed = sum(disp) / len(disp)
    return ReferenceValidation(kappa, overall, acc_unanimous, acc_disputed)


# Coefficients for Acklam's rational approximation of the inverse normal
# CDF; absolute error below 1.15e-9 over (0, 1).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    p_low, p_high = 0.02425, 1 - 0.02425
    if p < p_low:
        q = math.sqrt(-2 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1))
    if p > p_high:
        q = math.sqrt(-2 * math.log(1 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1))


def wilson_interval(successes: int, n: int, confidence: float = 0.95,
                    corrected: bool = False) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    ``corrected=True`` applies the continuity correction. Bounds are
    clamped to [0, 1].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= successes <= n:
        raise ValueError("successes must be in [0, n]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    z = normal_quantile(1 - (1 - confidence) / 2)
    p = successes / n

    if not corrected:
        denom = 1 + z * z / n
        center = (p + z * z / (2 * n)) / denom
        half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
        lower, upper = center - half, center + half
        # At the extremes the bound is exactly 0 or 1; remove float residue.
        if p == 0:
            lower = 0.0
        if p == 1:
            upper = 1.0
    else:
        denom = 2 * (n + z * z)
        lo_disc = z * z - 2 - 1 / n + 4 * p * (n * (1 - p) + 1)
        hi_disc = z * z + 2 - 1 / n + 4 * p * (n * (1 - p) - 1)
        lower = 0.0 if p == 0 else (
            (2 * n * p + z * z - 1 - z * math.sqrt(max(lo_disc, 0.0))) / denom)
        upper = 1.0 if p == 1 else (
            (2 * n * p + z * z + 1 + z * math.sqrt(max(hi_disc, 0.0))) / denom)

    return (max(0.0, lower), min(1.0, upper))


def agreement_report(segments) -> AgreementReport:
    """Build the full agreement summary over fully annotated segments."""
    rows = []
    by_annotator: dict[str, list] = {}
    for seg in segments:
        if len(seg.annotations) < 3:
            continue
        rows.append([e.primary for e in seg.annotations.entries])
        for e in seg.annotations.entries:
            by_annotator.setdefault(e.annotator_id, []).append(e.primary)
    if not rows:
        raise ValueError("no fully annotated segments")
    dist = consensus_distribution(segments)
    pairwise = pairwise_agreement(by_annotator)
    return AgreementReport(
        n_items=len(rows),
        unanimous_rate=dist.unanimous,
        majority_rate=dist.majority,
        disputed_rate=dist.disputed,
        pairwise=pairwise,
        fleiss_kappa=fleiss_kappa(rows),
    )
