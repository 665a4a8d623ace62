import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from policyaudit.corpus import Category
from policyaudit.reliability import (agreement_report, cohens_kappa,
                                     consensus_distribution, fleiss_kappa,
                                     normal_quantile, pairwise_agreement,
                                     reference_validation, wilson_interval)

from conftest import make_annotations, make_segment


def _phi(x: float) -> float:
    return 0.5 * (1 + math.erf(x / math.sqrt(2)))


def _quantile_oracle(p: float) -> float:
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if _phi(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def test_normal_quantile_against_bisection_oracle():
    for p in (0.001, 0.01, 0.025, 0.1, 0.5, 0.9, 0.975, 0.99, 0.999):
        assert normal_quantile(p) == pytest.approx(_quantile_oracle(p),
                                                   abs=1e-7)


def test_normal_quantile_rejects_boundaries():
    for p in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            normal_quantile(p)


def test_pairwise_agreement_basic():
    labels = {"a": ["X", "X", "Y", "Z"],
              "b": ["X", "Y", "Y", "Z"],
              "c": ["X", "X", "Y", "Y"]}
    out = pairwise_agreement(labels)
    assert out[("a", "b")] == 0.75
    assert out[("a", "c")] == 0.75
    assert out[("b", "c")] == 0.5


def test_pairwise_agreement_rejects_ragged_vectors():
    with pytest.raises(ValueError):
        pairwise_agreement({"a": ["X"], "b": ["X", "Y"]})


def test_consensus_distribution_counts_and_exclusions():
    segs = [
        make_segment("s1", annotations=make_annotations(
            Category.OTHER, Category.OTHER, Category.OTHER)),
        make_segment("s2", annotations=make_annotations(
            Category.OTHER, Category.OTHER, Category.TRACKING)),
        make_segment("s3", annotations=make_annotations(
            Category.OTHER, Category.TRACKING, Category.SECURITY)),
        make_segment("s4", annotations=make_annotations(Category.OTHER)),
    ]
    dist = consensus_distribution(segs)
    assert dist.as_tuple() == (pytest.approx(1 / 3), pytest.approx(1 / 3),
                               pytest.approx(1 / 3))
    assert dist.n_counted == 3
    assert dist.n_excluded == 1


def test_fleiss_kappa_hand_derived():
    # Two items, three raters: {A,A,A} and {A,A,B}.
    assert fleiss_kappa([["A", "A", "A"], ["A", "A", "B"]]) == \
        pytest.approx(-0.2)


def test_fleiss_kappa_perfect_agreement():
    assert fleiss_kappa([["A", "A"], ["B", "B"]]) == pytest.approx(1.0)
    assert fleiss_kappa([["A", "A", "A"]]) == 1.0


def test_fleiss_kappa_input_validation():
    with pytest.raises(ValueError):
        fleiss_kappa([])
    with pytest.raises(ValueError):
        fleiss_kappa([["A", "B"], ["A"]])
    with pytest.raises(ValueError):
        fleiss_kappa([["A"]])


def test_cohens_kappa_hand_derived():
    assert cohens_kappa(["X", "X", "Y", "Y"],
                        ["X", "Y", "Y", "Y"]) == pytest.approx(0.5)


def test_cohens_kappa_perfect_and_degenerate():
    assert cohens_kappa(["A", "B"], ["A", "B"]) == pytest.approx(1.0)
    assert cohens_kappa(["A", "A"], ["A", "A"]) == 1.0


def test_reference_validation_split():
    val = reference_validation(
        ["X", "X", "Y", "Z"], ["X", "Y", "Y", "Z"],
        ["unanimous", "unanimous", "majority", "majority"])
    assert val.accuracy_overall == 0.75
    assert val.accuracy_on_unanimous == 0.5
    assert val.accuracy_on_disputed == 1.0


def test_reference_validation_without_types():
    val = reference_validation(["X"], ["X"])
    assert val.accuracy_overall == 1.0
    assert val.accuracy_on_unanimous is None
    assert val.accuracy_on_disputed is None


def _wilson_oracle(k: int, n: int, confidence: float,
                   corrected: bool) -> tuple[float, float]:
    """Brute-force quadratic-inequality scan over a fine probability grid."""
    z = _quantile_oracle(1 - (1 - confidence) / 2)
    p_hat = k / n
    inside = []
    steps = 200001
    for i in range(steps):
        p = i / (steps - 1)
        if corrected:
            adj = 1 / (2 * n)
            sd = math.sqrt(p * (1 - p) / n)
            # p is inside when the continuity-corrected z statistic for the
            # observed proportion does not exceed z on either side.
            ok_low = (p_hat - adj) - p <= z * sd + 1e-15
            ok_high = p - (p_hat + adj) <= z * sd + 1e-15
            if ok_low and ok_high:
                inside.append(p)
        else:
            if (p_hat - p) ** 2 <= z * z * p * (1 - p) / n + 1e-15:
                inside.append(p)
    if k == 0:
        inside.append(0.0)
    if k == n:
        inside.append(1.0)
    return min(inside), max(inside)


def test_wilson_uncorrected_against_quadratic_oracle():
    for n in range(1, 21):
        for k in range(n + 1):
            lo, hi = wilson_interval(k, n, 0.95, corrected=False)
            olo, ohi = _wilson_oracle(k, n, 0.95, corrected=False)
            assert lo == pytest.approx(olo, abs=2e-5)
            assert hi == pytest.approx(ohi, abs=2e-5)


def test_wilson_corrected_against_quadratic_oracle():
    for n in range(1, 21):
        for k in range(n + 1):
            lo, hi = wilson_interval(k, n, 0.95, corrected=True)
            olo, ohi = _wilson_oracle(k, n, 0.95, corrected=True)
            assert lo == pytest.approx(olo, abs=2e-5)
            assert hi == pytest.approx(ohi, abs=2e-5)


def test_wilson_input_validation():
    with pytest.raises(ValueError):
        wilson_interval(1, 0)
    with pytest.raises(ValueError):
        wilson_interval(5, 4)
    with pytest.raises(ValueError):
        wilson_interval(1, 4, confidence=1.0)


@settings(max_examples=200, deadline=None)
@given(k=st.integers(0, 500), n=st.integers(1, 500),
       corrected=st.booleans())
def test_wilson_bounds_properties(k, n, corrected):
    if k > n:
        k = k % (n + 1)
    lo, hi = wilson_interval(k, n, 0.95, corrected=corrected)
    assert 0.0 <= lo <= hi <= 1.0
    if not corrected:
        assert lo <= k / n <= hi


def test_agreement_report_end_to_end():
    segs = [
        make_segment("s1", annotations=make_annotations(
            Category.OTHER, Category.OTHER, Category.OTHER)),
        make_segment("s2", annotations=make_annotations(
            Category.OTHER, Category.OTHER, Category.TRACKING)),
    ]
    rep = agreement_report(segs)
    assert rep.n_items == 2
    assert rep.unanimous_rate == 0.5
    assert rep.majority_rate == 0.5
    assert rep.pairwise[("ann-0", "ann-1")] == 1.0
    assert rep.pairwise[("ann-0", "ann-2")] == 0.5
