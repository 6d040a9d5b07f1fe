"""Weak, setwise and total-variation convergence diagnostics and (asymptotic) uniform integrability."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .families import FunctionFamily, MeasureSequence, check_compatible, quarter_start, tail_start
from .measure import INF, InputError, MetricPointSet, as_ext_array
from .report import BUG, FAIL, PASS, SURROGATE, Verdict

DEFAULT_K = tuple(2.0 ** k for k in range(21))
DEFAULT_RANDOM_SETS = 64
DEFAULT_BUMPS = 8


# ---------------------------------------------------------------------------
# Test functions and sets


@dataclass(frozen=True)
class TestFunction:
    name: str
    values: np.ndarray


def _embedding(space: MetricPointSet) -> np.ndarray | None:
    if space.coords is None:
        return None
    c = np.asarray(space.coords, dtype=float)
    return c[:, None] if c.ndim == 1 else c


def default_test_functions(space: MetricPointSet, seed: int = 0) -> list[TestFunction]:
    """Polynomials of degree <= 3 in each coordinate plus seeded Lipschitz bumps.

    Without an embedding the bumps are built from metric distances to random
    centers, which keeps them Lipschitz for any metric.
    """
    rng = np.random.default_rng(seed)
    n = len(space)
    out = [TestFunction("one", np.ones(n))]
    emb = _embedding(space)
    if emb is not None:
        for j in range(emb.shape[1]):
            for deg in (1, 2, 3):
                out.append(TestFunction(f"x{j}^{deg}", emb[:, j] ** deg))
        lo, hi = emb.min(axis=0), emb.max(axis=0)
        diam = max(float(np.linalg.norm(hi - lo)), 1e-12)
        for b in range(DEFAULT_BUMPS):
            center = lo + rng.random(emb.shape[1]) * (hi - lo)
            radius = diam * (0.25 + 0.75 * rng.random())
            dist = np.sqrt(((emb - center) ** 2).sum(axis=1))
            out.append(TestFunction(f"bump{b}", np.maximum(0.0, 1.0 - dist / radius)))
    else:
        for b in range(DEFAULT_BUMPS):
            c = int(rng.integers(n))
            radius = 0.25 + 0.75 * rng.random()
            out.append(TestFunction(f"bump{b}", np.maximum(0.0, 1.0 - space.row(c) / radius)))
    return out


def _as_tests(space: MetricPointSet, tests) -> list[TestFunction]:
    out = []
    for i, t in enumerate(tests):
        if isinstance(t, TestFunction):
            out.append(t)
            continue
        if isinstance(t, tuple) and len(t) == 2 and isinstance(t[0], str):
            name, f = t
        else:
            name, f = f"test{i}", t
        vals = np.array([f(p) for p in space.points], float) if callable(f) else as_ext_array(f, (len(space),), name)
        if not np.isfinite(vals).all():
            raise InputError(f"test function {name} must be bounded")
        out.append(TestFunction(name, vals))
    if not out:
        raise InputError("empty test list")
    return out


def default_sets(space: MetricPointSet, seed: int = 0, n_random: int = DEFAULT_RANDOM_SETS) -> np.ndarray:
    """All singletons plus seeded random subsets, as a boolean (n_sets, |S|) matrix."""
    n = len(space)
    rng = np.random.default_rng(seed)
    rand = rng.random((n_random, n)) < 0.5
    return np.vstack([np.eye(n, dtype=bool), rand])


def _as_sets(space: MetricPointSet, sets) -> np.ndarray:
    if isinstance(sets, np.ndarray) and sets.dtype == bool and sets.ndim == 2:
        if sets.shape[1] != len(space):
            raise InputError("set masks must match the space size")
        return sets
    rows = []
    for s in sets:
        m = np.zeros(len(space), dtype=bool)
        arr = np.asarray(s)
        if arr.dtype == bool and arr.shape == (len(space),):
            m = arr.copy()
        else:
            for p in s:
                m[space.index(p)] = True
        rows.append(m)
    if not rows:
        raise InputError("empty set family")
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# Convergence modes


def _last_quarter_gap(seq_vals: np.ndarray, lim_vals: np.ndarray, n_max: int) -> np.ndarray:
    q = quarter_start(n_max) - 1
    return np.abs(seq_vals[q:] - lim_vals).max(axis=0)


def weak_convergence_check(seq: MeasureSequence, tests=None, tol: float = 1e-9, seed: int = 0) -> Verdict:
    """int f dmu_n -> int f dmu for every test function, over the last quarter of the horizon."""
    assumptions = []
    if tests is None:
        tf = default_test_functions(seq.space, seed)
        assumptions.append(f"default surrogate test family: polynomials up to degree 3 and {DEFAULT_BUMPS} Lipschitz bumps (seed {seed})")
    else:
        tf = _as_tests(seq.space, tests)
        assumptions.append("continuity of the test functions is caller-asserted")
    V = np.column_stack([t.values for t in tf])
    ints = seq.weights @ V
    lim = seq.limit.weights @ V
    gaps = _last_quarter_gap(ints, lim, seq.n_max)
    mass_gap = float(_last_quarter_gap(seq.weights.sum(axis=1), seq.limit.weights.sum(), seq.n_max))
    ok = bool((gaps <= tol).all()) and mass_gap <= tol
    worst = int(np.argmax(gaps))
    return Verdict(
        "weak_convergence",
        PASS if ok else FAIL,
        quantities={"max_gap": float(gaps.max()), "worst_test": tf[worst].name, "mass_gap": mass_gap, "n_tests": len(tf)},
        horizon=seq.n_max,
        tolerance=tol,
        assumptions=assumptions,
        qualifier=SURROGATE if ok else "",
        details={"gaps": {t.name: float(g) for t, g in zip(tf, gaps)}},
    )


def setwise_convergence_check(seq: MeasureSequence, sets=None, tol: float = 1e-9, seed: int = 0) -> Verdict:
    """mu_n(C) -> mu(C) for every listed set C, over the last quarter of the horizon."""
    assumptions = []
    if sets is None:
        M = default_sets(seq.space, seed)
        assumptions.append(f"default set family: all singletons and {DEFAULT_RANDOM_SETS} random subsets (seed {seed})")
    else:
        M = _as_sets(seq.space, sets)
    Mf = M.T.astype(float)
    gaps = _last_quarter_gap(seq.weights @ Mf, seq.limit.weights @ Mf, seq.n_max)
    ok = bool((gaps <= tol).all())
    worst = int(np.argmax(gaps))
    return Verdict(
        "setwise_convergence",
        PASS if ok else FAIL,
        quantities={"max_gap": float(gaps.max()), "worst_set": worst, "n_sets": int(M.shape[0])},
        horizon=seq.n_max,
        tolerance=tol,
        assumptions=assumptions,
        qualifier=SURROGATE if ok else "",
    )


def tv_distances(seq: MeasureSequence) -> np.ndarray:
    return np.array([math.fsum(r) for r in np.abs(seq.weights - seq.limit.weights)])


def tv_convergence_check(seq: MeasureSequence, tol: float = 1e-9) -> Verdict:
    d = tv_distances(seq)
    q = quarter_start(seq.n_max) - 1
    worst = float(d[q:].max())
    return Verdict(
        "tv_convergence",
        PASS if worst <= tol else FAIL,
        quantities={"max_distance_last_quarter": worst, "final_distance": float(d[-1])},
        horizon=seq.n_max,
        tolerance=tol,
        details={"distances": [float(x) for x in d]},
    )


# ---------------------------------------------------------------------------
# Uniform integrability


@dataclass(frozen=True)
class UiCurve:
    K_values: tuple[float, ...]
    tail_values: tuple[float, ...]
    mode: str
    tolerance: float

    @property
    def final(self) -> float:
        return self.tail_values[-1]

    @property
    def passed(self) -> bool:
        return self.final <= self.tolerance


def check_k(K_schedule) -> np.ndarray:
    K = np.asarray(DEFAULT_K if K_schedule is None else K_schedule, dtype=float)
    if K.ndim != 1 or len(K) == 0:
        raise InputError("K schedule must be nonempty")
    if (K <= 0).any() or (np.diff(K) <= 0).any():
        raise InputError("K schedule must be positive and ascending")
    return K


def tail_integrals(values: np.ndarray, weights: np.ndarray, K: np.ndarray) -> np.ndarray:
    """I[n, k] = int |f_n| 1{|f_n| >= K_k} dmu_n, with 0 * inf = 0."""
    a = np.abs(values)
    out = np.zeros((values.shape[0], len(K)))
    live = weights > 0
    for k, kv in enumerate(K):
        m = (a >= kv) & live
        term = np.zeros_like(a)
        np.multiply(a, weights, out=term, where=m)
        out[:, k] = term.sum(axis=1)
    return out


def _curve(values: np.ndarray, weights: np.ndarray, K_schedule, mode: str, tol: float) -> UiCurve:
    K = check_k(K_schedule)
    I = tail_integrals(values, weights, K)
    if np.isnan(I).any():
        raise InputError("undefined tail integral")
    rows = I if mode == "ui" else I[tail_start(values.shape[0]) - 1:]
    tv = rows.max(axis=0)
    return UiCurve(tuple(float(k) for k in K), tuple(float(x) for x in tv), mode, tol)


def aui_estimate(fam: FunctionFamily, seq: MeasureSequence, K_schedule=None, tol: float = 1e-9) -> UiCurve:
    """max over the tail of int |f_n| 1{|f_n| >= K} dmu_n, per K."""
    check_compatible(fam, seq)
    return _curve(fam.values, seq.weights, K_schedule, "aui", tol)


def ui_estimate(fam: FunctionFamily, seq: MeasureSequence, K_schedule=None, tol: float = 1e-9) -> UiCurve:
    """sup over all n of int |f_n| 1{|f_n| >= K} dmu_n, per K."""
    check_compatible(fam, seq)
    return _curve(fam.values, seq.weights, K_schedule, "ui", tol)


def aui_values(values: np.ndarray, weights: np.ndarray, K_schedule=None, tol: float = 1e-9) -> UiCurve:
    """aui_estimate on raw arrays; weights may be a single row shared by every n."""
    w = np.broadcast_to(weights, values.shape)
    return _curve(values, w, K_schedule, "aui", tol)


def ui_aui_equivalence_probe(fam: FunctionFamily, seq: MeasureSequence, K_schedule=None, tol: float = 1e-9) -> Verdict:
    """Smallest shift N such that {f_n}_{n >= N} is u.i.; checks aui <=> some N <= N_max/2 works."""
    check_compatible(fam, seq)
    K = check_k(K_schedule)
    I = tail_integrals(fam.values, seq.weights, K[-1:])[:, 0]
    suffix_max = np.maximum.accumulate(I[::-1])[::-1]
    ok_from = np.flatnonzero(suffix_max <= tol)
    shift = int(ok_from[0]) + 1 if len(ok_from) else None
    aui = aui_estimate(fam, seq, K, tol).passed
    ui = ui_estimate(fam, seq, K, tol).passed
    within = shift is not None and shift <= tail_start(fam.n_max)
    consistent = aui == within and (not ui or aui)
    return Verdict(
        "ui_aui_equivalence",
        PASS if consistent else BUG,
        quantities={"shift": shift if shift is not None else INF, "aui": aui, "ui": ui},
        horizon=fam.n_max,
        tolerance=tol,
    )

