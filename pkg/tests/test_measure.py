import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmlab.measure import (
    INF,
    AtomicMeasure,
    InputError,
    MetricPointSet,
    UndefinedOperation,
    ext_add,
    ext_close,
    ext_mul,
    ext_real,
    integrate,
    integrate_array,
    total_mass,
    total_variation_distance,
)


def line(n=4):
    return MetricPointSet.euclidean(np.arange(n, dtype=float))


def test_ext_real_parses_infinity_strings():
    assert ext_real("inf") == INF
    assert ext_real("-inf") == -INF
    assert ext_real(2) == 2.0


@pytest.mark.parametrize("bad", [float("nan"), "nan", "abc", None])
def test_ext_real_rejects_nan_and_junk(bad):
    with pytest.raises(InputError):
        ext_real(bad)


def test_opposite_infinities_do_not_add():
    with pytest.raises(UndefinedOperation):
        ext_add(INF, -INF)
    assert ext_add(INF, 1.0) == INF


def test_zero_times_infinity_is_zero():
    assert ext_mul(0.0, INF) == 0.0
    assert ext_mul(-INF, 0.0) == 0.0
    assert ext_mul(2.0, -INF) == -INF


def test_ext_close_infinities():
    assert ext_close(INF, INF, 0.0)
    assert not ext_close(INF, 1e300, 1e300)


def test_integral_of_zero_and_probability_normalization():
    mu = AtomicMeasure(line(), [0.25] * 4)
    assert integrate(np.zeros(4), mu).require() == 0.0
    assert integrate(lambda p: 1.0, mu).require() == 1.0


def test_integral_undefined_when_both_parts_infinite():
    mu = AtomicMeasure(line(2), [0.5, 0.5])
    v = integrate([INF, -INF], mu)
    assert not v.defined
    with pytest.raises(UndefinedOperation):
        v.require()


def test_infinite_value_on_null_atom_is_ignored():
    mu = AtomicMeasure(line(2), [1.0, 0.0])
    assert integrate([3.0, -INF], mu).require() == 3.0


def test_callable_only_evaluated_on_support():
    mu = AtomicMeasure(line(3), [1.0, 0.0, 0.0])

    def f(p):
        if p != 0.0:
            raise RuntimeError("evaluated off support")
        return 2.0

    assert integrate(f, mu).require() == 2.0


def test_evaluation_failure_is_input_error():
    mu = AtomicMeasure(line(2), [1.0, 1.0])
    with pytest.raises(InputError):
        integrate(lambda p: 1 / 0, mu)


def test_integrate_array_rows():
    ok, v = integrate_array(np.array([[1.0, 2.0], [INF, -INF]]), np.array([0.5, 0.5]))
    assert ok.tolist() == [True, False]
    assert v[0] == 1.5 and math.isnan(v[1])


def test_total_variation_examples():
    sp = line(2)
    a = AtomicMeasure.dirac(sp, 0.0)
    b = AtomicMeasure.dirac(sp, 1.0)
    assert total_variation_distance(a, a) == 0.0
    assert total_variation_distance(a, b) == 2.0
    mu = AtomicMeasure(sp, [0.7, 0.3])
    nu = AtomicMeasure(sp, [0.5, 0.5])
    # sup over sign patterns of f on two atoms
    brute = max(abs(s0 * 0.2 + s1 * -0.2) for s0 in (-1, 1) for s1 in (-1, 1))
    assert total_variation_distance(mu, nu) == pytest.approx(brute, abs=1e-15)
    assert total_variation_distance(mu, nu) == pytest.approx(0.4, abs=1e-15)


def test_total_variation_rejects_mismatched_spaces():
    with pytest.raises(InputError):
        total_variation_distance(AtomicMeasure.dirac(line(2), 0.0), AtomicMeasure.dirac(line(3), 0.0))


def test_total_mass():
    assert total_mass(AtomicMeasure(line(2), [0.0, 0.0])) == 0.0
    assert total_mass(AtomicMeasure(line(2), [0.25, 0.75])) == 1.0


def test_measure_validation():
    with pytest.raises(InputError):
        AtomicMeasure(line(2), [-0.1, 1.0])
    with pytest.raises(InputError):
        AtomicMeasure(line(2), [INF, 1.0])
    with pytest.raises(InputError):
        AtomicMeasure(line(2), [1.0])
    with pytest.raises(InputError):
        AtomicMeasure.from_mapping(line(2), {5.0: 1.0})


def test_measure_json_roundtrip():
    sp = line(3)
    mu = AtomicMeasure(sp, [0.1, 0.2, 1e-17])
    back = AtomicMeasure.from_json(mu.to_json(), sp)
    assert np.array_equal(back.weights, mu.weights)
    with pytest.raises(InputError):
        AtomicMeasure.from_json(mu.to_json(), line(4))


def test_metric_validation():
    with pytest.raises(InputError):
        MetricPointSet.from_matrix(["a", "b"], [[0, 1], [2, 0]])
    with pytest.raises(InputError):
        MetricPointSet.from_matrix(["a", "b"], [[0, 0], [0, 0]])
    with pytest.raises(InputError):
        MetricPointSet.from_matrix(["a", "b", "c"], [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(InputError):
        MetricPointSet.euclidean([0.0, 0.0])
    with pytest.raises(InputError):
        MetricPointSet.discrete(["a", "a"])


def test_discrete_metric_balls_are_singletons():
    sp = MetricPointSet.discrete(["a", "b", "c"])
    balls = sp.finest_balls((0.5, 0.25))
    assert all(len(balls.members(i)) == 1 for i in range(3))


def test_finest_ball_is_smallest_nontrivial():
    sp = MetricPointSet.euclidean([0.0, 0.1, 0.3, 1.0])
    balls = sp.finest_balls(tuple(2.0 ** -k for k in range(1, 10)))
    # nearest neighbour of 0 is at 0.1: smallest dyadic radius above it is 1/8
    assert balls.radius[0] == 0.125
    assert sp.points[1] in [sp.points[j] for j in balls.members(0)]
    # point 1.0 has no neighbour within the largest radius 1/2
    assert list(balls.members(3)) == [3]


def test_line_and_dense_balls_agree():
    xs = np.sort(np.random.default_rng(1).choice(500, 40, replace=False) / 64.0)
    a = MetricPointSet.euclidean(xs)
    b = MetricPointSet.from_matrix(tuple(xs), np.abs(xs[:, None] - xs[None, :]))
    radii = tuple(2.0 ** -k for k in range(1, 20))
    ba, bb = a.finest_balls(radii), b.finest_balls(radii)
    for i in range(len(xs)):
        assert list(ba.members(i)) == list(bb.members(i))


weights = st.lists(st.integers(0, 64), min_size=3, max_size=3).map(lambda v: np.array(v) / 64.0)


@settings(max_examples=60, deadline=None)
@given(weights, weights, weights)
def test_total_variation_is_a_metric(a, b, c):
    sp = line(3)
    mu, nu, la = AtomicMeasure(sp, a), AtomicMeasure(sp, b), AtomicMeasure(sp, c)
    assert total_variation_distance(mu, nu) == total_variation_distance(nu, mu)
    assert total_variation_distance(mu, mu) == 0.0
    assert total_variation_distance(mu, la) <= total_variation_distance(mu, nu) + total_variation_distance(nu, la) + 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 10 ** 6))
def test_total_variation_equals_twice_max_subset_gap(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.dirichlet(np.ones(k))
    b = rng.dirichlet(np.ones(k))
    sp = line(k)
    best = max(abs(sum(a[list(C)]) - sum(b[list(C)])) for r in range(k + 1) for C in itertools.combinations(range(k), r))
    assert total_variation_distance(AtomicMeasure(sp, a), AtomicMeasure(sp, b)) == pytest.approx(2 * best, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-100, 100), min_size=4, max_size=4), weights)
def test_integral_additive_over_support_split(vals, w3):
    sp = line(4)
    w = np.append(w3, 0.5)
    f = np.array(vals, dtype=float)
    left = np.array([1, 1, 0, 0], dtype=float)
    total = integrate(f, AtomicMeasure(sp, w)).require()
    parts = integrate(f, AtomicMeasure(sp, w * left)).require() + integrate(f, AtomicMeasure(sp, w * (1 - left))).require()
    assert total == pytest.approx(parts, abs=1e-12)
