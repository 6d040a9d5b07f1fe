import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmlab.families import FunctionFamily, dyadic_radii, tail_start
from vmlab.measure import INF, AtomicMeasure, MetricPointSet
from vmlab.report import BUG, FAIL, INAPPLICABLE, PASS
from vmlab.semicontinuity import (
    double_lower_limits,
    double_upper_limits,
    llim_equality_check,
    lsec_check,
    monotone_double_limit_check,
    pointwise_lower_limits,
    semi_convergence_in_measure_check,
    tail_oscillation,
    uniform_semi_convergence_below_check,
    usec_check,
)


def grid(R=16):
    return MetricPointSet.euclidean(np.arange(R) / R)


def brute_double_lower(xs, vals, radii):
    """Independent loop: smallest dyadic radius above the nearest-neighbour gap, min over ball and tail."""
    T = tail_start(vals.shape[0])
    out = []
    for i, x in enumerate(xs):
        nn = min(abs(x - y) for j, y in enumerate(xs) if j != i)
        above = [r for r in radii if r > nn]
        r = min(above) if above else None
        members = [j for j, y in enumerate(xs) if (j == i or (r is not None and abs(x - y) < r))]
        out.append(min(vals[n, j] for n in range(T - 1, vals.shape[0]) for j in members))
    return np.array(out)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_double_lower_limit_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.choice(200, int(rng.integers(2, 10)), replace=False) / 64.0)
    vals = rng.integers(-20, 20, (int(rng.integers(8, 14)), len(xs))) / 4.0
    fam = FunctionFamily(MetricPointSet.euclidean(xs), vals)
    radii = dyadic_radii()
    dll = double_lower_limits(fam, radii)
    assert np.array_equal(dll, brute_double_lower(xs, vals, radii))
    assert (dll <= pointwise_lower_limits(fam)).all()
    assert np.array_equal(double_upper_limits(fam), -double_lower_limits(fam.negated()))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_usec_is_lsec_of_negation(seed):
    rng = np.random.default_rng(seed)
    vals = rng.integers(-4, 5, (8, 8)) / 2.0
    fam = FunctionFamily(grid(8), vals)
    assert usec_check(fam).status == lsec_check(fam.negated()).status


def test_constant_family_is_lsec_and_converges_uniformly():
    fam = FunctionFamily(grid(), np.ones((10, 16)), np.ones(16))
    assert lsec_check(fam).passed
    assert uniform_semi_convergence_below_check(fam).passed
    assert llim_equality_check(fam).status == PASS


def test_jump_family_fails_lsec_at_jump():
    xs = np.arange(16) / 16
    vals = np.tile(np.where(xs < 0.5, 0.0, 1.0), (8, 1))
    fam = FunctionFamily(grid(), vals)
    v = lsec_check(fam, eps_schedule=[0.5])
    assert v.status == FAIL
    assert v.details["failing"] == [0.5]
    w = v.details["witnesses"][0]
    assert w["s"] == 0.5 and w["f_n_s_prime"] == 0.0 and w["f_n_s"] == 1.0


def test_decreasing_approach_from_above_converges_below_at_first_index():
    # f_n = f + 1/n never drops below f, so the minimal index is 1 for every eps
    n = np.arange(1, 33)[:, None]
    f = np.arange(16) / 16
    fam = FunctionFamily(grid(), f[None, :] + 1.0 / n, f)
    v = uniform_semi_convergence_below_check(fam, eps_schedule=[0.5, 0.125, 2 ** -10])
    assert v.passed and v.quantities["max_minimal_N"] == 1


def test_approach_from_below_minimal_index():
    n = np.arange(1, 65)[:, None]
    fam = FunctionFamily(grid(4), np.zeros(4)[None, :] - 1.0 / n + np.zeros((64, 4)), np.zeros(4))
    v = uniform_semi_convergence_below_check(fam, eps_schedule=[0.25, 2 ** -4])
    # -1/n <= -eps exactly for n <= 1/eps, so N = 1/eps + 1
    assert v.details["minimal_N"] == {"0.25": 5, "0.0625": 17}
    assert v.passed
    v = uniform_semi_convergence_below_check(fam, eps_schedule=[2 ** -6])
    assert v.status == FAIL and v.quantities["max_minimal_N"] == 65


def test_semi_convergence_in_measure_ignores_null_sets():
    sp = grid(4)
    vals = np.zeros((8, 4))
    vals[:, 3] = -5.0
    fam = FunctionFamily(sp, vals, np.zeros(4))
    assert semi_convergence_in_measure_check(fam, AtomicMeasure(sp, [0.5, 0.5, 0, 0])).passed
    v = semi_convergence_in_measure_check(fam, AtomicMeasure(sp, [0.25] * 4), direction="both")
    assert not v.passed and v.quantities["lower_max_tail_mass"] == 0.25
    assert v.quantities["upper_max_tail_mass"] == 0.0


def test_llim_forward_direction_and_converse():
    # lsec family converging pointwise: (a), (b), (c) all hold
    xs = np.arange(16) / 16
    n = np.arange(1, 17)[:, None]
    fam = FunctionFamily(grid(), np.tile(xs, (16, 1)) + 1.0 / n)
    v = llim_equality_check(fam, eps_schedule=[0.5, 0.25])
    assert v.status == PASS and v.quantities["lsec_points"] == 16


def test_llim_jump_in_time_breaks_equality():
    # f_n(s) = 1 except f_n(1/2 + 1/16) = 0 for every n: at 1/2, double lower limit 0 < pointwise 1
    vals = np.ones((8, 16))
    vals[:, 9] = 0.0
    fam = FunctionFamily(grid(), vals)
    dll = double_lower_limits(fam)
    assert dll[8] == 0.0 and pointwise_lower_limits(fam)[8] == 1.0
    assert llim_equality_check(fam, eps_schedule=[0.5]).status != BUG


def test_monotone_double_limit():
    n = np.arange(1, 17)[:, None]
    f = np.arange(16) / 16
    fam = FunctionFamily(grid(), f[None, :] - 1.0 / n)
    v = monotone_double_limit_check(fam, tol=1.0 / 16 + 1.0 / 8 + 1e-12)
    assert v.passed
    # discrete jump: limit is lsc only from the right, so the double limit misses
    vals = np.tile(np.where(f < 0.5, 1.0, 0.0), (8, 1))
    v = monotone_double_limit_check(FunctionFamily(grid(), vals))
    assert v.status == FAIL and v.details["mismatched"] == [0.4375]
    dec = FunctionFamily(grid(), f[None, :] + 1.0 / n)
    assert monotone_double_limit_check(dec).status == INAPPLICABLE


def test_infinite_values():
    vals = np.full((8, 3), INF)
    fam = FunctionFamily(grid(3), vals)
    assert lsec_check(fam).passed
    assert tail_oscillation(vals).tolist() == [0.0, 0.0, 0.0]
    vals2 = vals.copy()
    vals2[-1, 0] = 1.0
    assert tail_oscillation(vals2)[0] == INF


@pytest.mark.parametrize("R", [4, 16])
def test_discrete_metric_makes_everything_lsec(R):
    rng = np.random.default_rng(R)
    fam = FunctionFamily(MetricPointSet.discrete(list(range(R))), rng.normal(size=(8, R)))
    assert lsec_check(fam).passed
    assert np.array_equal(double_lower_limits(fam), pointwise_lower_limits(fam))
