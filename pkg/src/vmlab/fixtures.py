"""Exact finite renderings of classical counterexamples, with their analytically known values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import mdp
from . import semicontinuity as sc
from .convergence import setwise_convergence_check, tv_convergence_check, weak_convergence_check
from .families import FunctionFamily, MeasureSequence, quarter_start
from .measure import AtomicMeasure, InputError, MetricPointSet, ext_close
from .report import Verdict, dumps
from .theorems import TheoremInstance, run_engine

TOL = 1e-9
LIPSCHITZ_BOUND = 4.0  # bound on the Lipschitz constants of the default test functions on [0, 1]


@dataclass(frozen=True)
class Expected:
    """One expected entry: a number within tol, or an exact value when tol is None."""

    key: str
    value: Any
    tol: float | None = TOL
    note: str = ""

    def matches(self, measured) -> bool:
        if measured is None:
            return False
        if self.tol is None:
            return measured == self.value
        return ext_close(float(measured), float(self.value), self.tol)


@dataclass
class Fixture:
    name: str
    description: str
    grid_resolution: int
    expected: tuple[Expected, ...]
    runner: Callable[["Fixture"], tuple[dict, list[Verdict]]]
    instance: Any = None
    model: mdp.MdpModel | None = None
    family: FunctionFamily | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)

    def run(self) -> tuple[dict, list[Verdict]]:
        return self.runner(self)

    def serialize(self) -> str:
        """Canonical text of the constructed data; equal parameters give equal text."""
        doc: dict[str, Any] = {"name": self.name, "grid_resolution": self.grid_resolution, "params": self.params}
        if self.model is not None:
            doc["model"] = mdp.model_to_dict(self.model)
        fam = self.family if self.family is not None else getattr(self.instance, "fam", None)
        if fam is not None:
            doc["points"] = [repr(p) for p in fam.space.points]
            doc["values"] = fam.values.tolist()
            doc["limit"] = None if fam.limit is None else fam.limit.tolist()
        if isinstance(self.instance, TheoremInstance):
            doc["weights"] = self.instance.seq.weights.tolist()
            doc["limit_weights"] = self.instance.seq.limit.weights.tolist()
        return dumps(doc)


@dataclass(frozen=True)
class EntryResult:
    key: str
    expected: Any
    measured: Any
    tol: float | None
    matched: bool

    def to_dict(self) -> dict:
        return {"key": self.key, "expected": self.expected, "measured": self.measured, "tolerance": self.tol, "matched": self.matched}


@dataclass
class FixtureReport:
    name: str
    entries: list[EntryResult]
    verdicts: list[Verdict]
    quantities: dict

    @property
    def matched(self) -> bool:
        return all(e.matched for e in self.entries)

    def entry(self, key: str) -> EntryResult:
        for e in self.entries:
            if e.key == key:
                return e
        raise KeyError(key)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "fixture": self.name,
            "matched": self.matched,
            "entries": [e.to_dict() for e in self.entries],
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


def verify(fixture: Fixture) -> FixtureReport:
    measured, verdicts = fixture.run()
    entries = []
    for ex in fixture.expected:
        m = measured.get(ex.key)
        entries.append(EntryResult(ex.key, ex.value, m, ex.tol, ex.matches(m)))
    return FixtureReport(fixture.name, entries, verdicts, measured)


def _check_resolution(R: int, minimum: int = 64) -> None:
    if R < minimum or R & (R - 1):
        raise InputError(f"grid resolution must be a power of 2 >= {minimum}, got {R}")


def _index_of(space: MetricPointSet, x: float) -> int:
    return space.index(float(x))


def mode_checks(seq: MeasureSequence, tolerances: dict[str, float], sets=None, seed: int = 0) -> list[Verdict]:
    return [
        tv_convergence_check(seq, tolerances["tv"]),
        setwise_convergence_check(seq, sets, tolerances["setwise"], seed),
        weak_convergence_check(seq, None, tolerances["weak"], seed),
    ]


# ---------------------------------------------------------------------------
# Alternating bumps on [-1, 1]


def alternating_bumps(resolution: int = 64, horizon: int = 64) -> Fixture:
    """f_n = 0 for odd n and max(1 - n|t|, 0) for even n, on the grid k/resolution of [-1, 1]."""
    _check_resolution(resolution)
    if horizon > resolution or horizon % 2:
        raise InputError("horizon must be even and at most the grid resolution")
    xs = np.arange(-resolution, resolution + 1) / resolution
    space = MetricPointSet.euclidean(xs)
    n = np.arange(1, horizon + 1)[:, None]
    vals = np.where(n % 2 == 1, 0.0, np.maximum(1.0 - n * np.abs(xs)[None, :], 0.0))
    fam = FunctionFamily(space, vals, name="alternating bumps")

    def run(fx: Fixture):
        f = fx.family
        i0 = _index_of(f.space, 0.0)
        lsec = sc.lsec_check(f)
        pts_ok = sc.lsec_points(f)
        N = f.n_max
        q = {
            "double_lower_limit_at_0": float(sc.double_lower_limits(f)[i0]),
            "pointwise_limsup_at_0": float(sc.pointwise_upper_limits(f)[i0]),
            "pointwise_liminf_at_0": float(sc.pointwise_lower_limits(f)[i0]),
            "lsec_at_0": "pass" if pts_ok[i0] else "fail",
            "bump_edge_value": f.eval(N, 1.0 / N),
            "grid_symmetric": bool(np.array_equal(xs, -xs[::-1])),
        }
        return q, [lsec, sc.llim_equality_check(f)]

    expected = (
        Expected("double_lower_limit_at_0", 0.0),
        Expected("pointwise_limsup_at_0", 1.0),
        Expected("pointwise_liminf_at_0", 0.0),
        Expected("lsec_at_0", "fail", None),
        Expected("bump_edge_value", 0.0, note="f_N(1/N) for the even horizon N"),
        Expected("grid_symmetric", True, None),
    )
    return Fixture("alternating-bumps", "alternating triangular bumps at 0", resolution, expected, run, family=fam, params={"horizon": horizon})


# ---------------------------------------------------------------------------
# Ramps converging to an indicator


def ramp_to_indicator(resolution: int = 2 ** 14, horizon: int = 8) -> Fixture:
    """f_n(s) = min(n s, 1) -> I{s != 0}; points 0, 1/(n(n+1)) for n <= N, and a grid on [1/(N(N+1)), 1]."""
    _check_resolution(resolution)
    first = 1.0 / (horizon * (horizon + 1))
    grid = np.arange(resolution + 1) / resolution
    grid = grid[grid >= first]
    special = [0.0] + [1.0 / (n * (n + 1)) for n in range(1, horizon + 1)]
    xs = np.unique(np.concatenate([special, grid]))
    space = MetricPointSet.euclidean(xs)
    n = np.arange(1, horizon + 1)[:, None]
    vals = np.minimum(n * xs[None, :], 1.0)
    fam = FunctionFamily(space, vals, (xs != 0).astype(float), name="ramps")

    def run(fx: Fixture):
        f = fx.family
        lsec = sc.lsec_check(f)
        below = sc.uniform_semi_convergence_below_check(f)
        wit = below.details["witnesses"]
        realized = False
        wval = None
        if wit:
            w = wit[0]
            realized = ext_close(w["s"], 1.0 / (w["n"] * (w["n"] + 1)), 0.0)
            wval = w["f_n_s"]
        N = f.n_max
        q = {
            "lsec": lsec.status,
            "uniform_semi_convergence_below": below.status,
            "witness_at_reciprocal_product": realized,
            "witness_value": wval,
            "values_at_0": float(np.abs(f.values[:, _index_of(f.space, 0.0)]).max()),
        }
        return q, [lsec, below]

    expected = (
        Expected("lsec", "pass", None),
        Expected("uniform_semi_convergence_below", "fail", None),
        Expected("witness_at_reciprocal_product", True, None, "witness s = 1/(n(n+1))"),
        Expected("witness_value", 1.0 / (horizon + 1), 1e-12, "f_N(1/(N(N+1))) = 1/(N+1)"),
        Expected("values_at_0", 0.0),
    )
    return Fixture("ramp-to-indicator", "continuous ramps with a lower semicontinuous indicator limit", resolution, expected, run, family=fam, params={"horizon": horizon})


# ---------------------------------------------------------------------------
# Weakly but not setwise converging atoms on [0, 2] with a split metric


def split_metric_space(xs: np.ndarray) -> MetricPointSet:
    """Euclidean distance between points of [0, 1), distance 1 between any other distinct pair."""
    xs = np.asarray(xs, dtype=float)
    inner = xs < 1.0

    def row(i: int) -> np.ndarray:
        if inner[i]:
            r = np.where(inner, np.abs(xs - xs[i]), 1.0)
        else:
            r = np.ones(len(xs))
        r[i] = 0.0
        return r

    return MetricPointSet(tuple(float(x) for x in xs), row, kind="split", coords=xs)


def split_metric_windows(resolution: int = 1024, horizon: int = 64) -> Fixture:
    """mu_n = uniform atoms at k/n plus Lebesgue on [1, 2]; f_n = 1 minus a dyadic window in (1, 2]."""
    _check_resolution(resolution)
    if horizon > resolution:
        raise InputError("grid resolution must be at least the horizon")
    R, N = resolution, horizon
    atoms = sorted({Fraction(k, n) for n in range(1, N + 1) for k in range(n)} | {Fraction(k, R) for k in range(R)})
    inner = np.array([float(a) for a in atoms])
    outer = 1.0 + np.arange(0, R + 1) / R  # includes s = 1, which carries no Lebesgue weight
    xs = np.concatenate([inner, outer])
    space = split_metric_space(xs)
    grid_inner = np.isin(inner, np.arange(R) / R)
    lebesgue = np.concatenate([np.where(grid_inner, 1.0 / R, 0.0), np.r_[0.0, np.full(R, 1.0 / R)]])
    mu = AtomicMeasure(space, lebesgue)
    weights = np.zeros((N, len(xs)))
    vals = np.ones((N, len(xs)))
    frac_index = {a: i for i, a in enumerate(atoms)}
    m = np.arange(0, R + 1)
    for n in range(1, N + 1):
        for k in range(n):
            weights[n - 1, frac_index[Fraction(k, n)]] = 1.0 / n
        weights[n - 1, len(inner):] = lebesgue[len(inner):]
        k2 = int(math.floor(math.log2(n)))
        j = n - 2 ** k2
        # s = 1 + m/R lies in (1 + j/2^k, 1 + (j+1)/2^k] iff j R/2^k < m <= (j+1) R/2^k
        lo, hi = j * R // 2 ** k2, (j + 1) * R // 2 ** k2
        vals[n - 1, len(inner):] = np.where((m > lo) & (m <= hi), 0.0, 1.0)
    seq = MeasureSequence(space, weights, mu)
    fam = FunctionFamily(space, vals, np.ones(len(xs)), name="dyadic windows")
    Q = quarter_start(N)
    tol_w = LIPSCHITZ_BOUND / (2 * Q) + LIPSCHITZ_BOUND / (2 * R)
    tols = {"tv": TOL, "setwise": TOL, "weak": tol_w}
    off_support = np.zeros(len(xs), dtype=bool)
    off_support[: len(inner)] = grid_inner & ~np.isin(inner, [float(Fraction(k, n)) for n in range(1, N + 1) for k in range(n)])
    inst = TheoremInstance(fam, seq, convergence_tol=tol_w)

    def run(fx: Fixture):
        inst = fx.instance
        sets = np.vstack([off_support, np.eye(len(xs), dtype=bool)[len(inner):len(inner) + 1]])
        checks = mode_checks(inst.seq, fx.tolerances, sets)
        dbl = run_engine("fatou_weak_double", inst)
        cls = run_engine("fatou_classic_weak", inst)
        lsec = sc.lsec_check(inst.fam)
        q = {
            "integral_liminf": dbl.quantities.get("integral_liminf"),
            "limit_integral": cls.quantities.get("limit_integral"),
            "double_lower_integral": dbl.quantities.get("double_lower_integral"),
            "weak_convergence": checks[2].status,
            "setwise_convergence": checks[1].status,
            "lsec": lsec.status,
            "fatou_weak_double": dbl.status,
            "min_total_mass": float(inst.seq.weights.sum(axis=1).min()),
            "max_total_mass": float(inst.seq.weights.sum(axis=1).max()),
            "rho(0.2,0.3)": inst.fam.space.distance(0.2, 0.3),
            "rho(0.5,1.5)": inst.fam.space.distance(0.5, 1.5),
        }
        return q, checks + [lsec, dbl, cls]

    expected = (
        Expected("integral_liminf", 2.0),
        Expected("limit_integral", 2.0),
        Expected("double_lower_integral", 1.0),
        Expected("weak_convergence", "pass", None),
        Expected("setwise_convergence", "fail", None),
        Expected("lsec", "pass", None),
        Expected("fatou_weak_double", "pass", None),
        Expected("min_total_mass", 2.0),
        Expected("max_total_mass", 2.0),
        Expected("rho(0.2,0.3)", 0.1),
        Expected("rho(0.5,1.5)", 1.0),
    )
    return Fixture(
        "split-metric-windows",
        "weakly converging atoms on [0, 2] with a split metric and shrinking windows",
        R, expected, run, instance=inst, tolerances=tols, params={"horizon": N},
    )


# ---------------------------------------------------------------------------
# Setwise converging oscillating densities on [0, 1]


def dyadic_union_sets(R: int, max_level: int, n_random: int = 64, seed: int = 0) -> np.ndarray:
    """Every dyadic interval of level <= max_level plus seeded random unions of level-max_level intervals."""
    cell = np.arange(R)
    rows = []
    for lvl in range(max_level + 1):
        idx = cell * 2 ** lvl // R
        for j in range(2 ** lvl):
            rows.append(idx == j)
    rng = np.random.default_rng(seed)
    idx = cell * 2 ** max_level // R
    for _ in range(n_random):
        pick = rng.random(2 ** max_level) < 0.5
        rows.append(pick[idx])
    return np.vstack(rows)


def oscillating_density_windows(resolution: int = 4096, horizon: int = 10) -> Fixture:
    """mu_n has density 2 on the even level-n dyadic cells; f_n = 1 minus a dyadic window."""
    _check_resolution(resolution)
    R, N = resolution, horizon
    if 2 ** N > R // 4:
        raise InputError("grid resolution too coarse for the horizon: need 2^(N+2) <= resolution")
    xs = np.arange(R) / R
    space = MetricPointSet.euclidean(xs)
    mu = AtomicMeasure(space, np.full(R, 1.0 / R))
    cell = np.arange(R)
    weights = np.zeros((N, R))
    vals = np.ones((N, R))
    for n in range(1, N + 1):
        weights[n - 1] = np.where((cell * 2 ** n // R) % 2 == 0, 2.0 / R, 0.0)
        k = int(math.floor(math.log2(n)))
        j = n - 2 ** k
        vals[n - 1] = np.where(cell * 2 ** k // R == j, 0.0, 1.0)
    seq = MeasureSequence(space, weights, mu)
    fam = FunctionFamily(space, vals, np.ones(R), name="dyadic windows")
    Q = quarter_start(N)
    tols = {"tv": TOL, "setwise": TOL, "weak": LIPSCHITZ_BOUND * 2.0 ** -Q}
    sets = dyadic_union_sets(R, Q - 1)
    inst = TheoremInstance(fam, seq, sets=sets)

    def run(fx: Fixture):
        inst = fx.instance
        checks = mode_checks(inst.seq, fx.tolerances, inst.sets)
        sw = run_engine("fatou_setwise", inst)
        q = {
            "integral_liminf": sw.quantities.get("integral_liminf"),
            "limit_integral": sw.quantities.get("limit_integral"),
            "pointwise_lower_integral": sw.child("setwise_pointwise").quantities.get("pointwise_lower_integral"),
            "setwise_convergence": checks[1].status,
            "tv_convergence": checks[0].status,
            "max_total_mass_gap": float(np.abs(inst.seq.weights.sum(axis=1) - 1.0).max()),
        }
        return q, checks + [sw, run_engine("lebesgue_setwise", inst)]

    expected = (
        Expected("integral_liminf", 1.0),
        Expected("limit_integral", 1.0),
        Expected("pointwise_lower_integral", 0.0),
        Expected("setwise_convergence", "pass", None),
        Expected("tv_convergence", "fail", None),
        Expected("max_total_mass_gap", 0.0),
    )
    return Fixture(
        "oscillating-density-windows",
        "setwise but not TV converging densities with shrinking windows",
        R, expected, run, instance=inst, tolerances=tols, params={"horizon": N},
    )


# ---------------------------------------------------------------------------
# Monotone ramps under measures collapsing to a point mass


def _collapsing_setup(resolution: int, horizon: int):
    R, N = resolution, horizon
    if N > R:
        raise InputError("grid resolution must be at least the horizon")
    mids = (np.arange(R) + 0.5) / R
    xs = np.concatenate([[0.0], mids])
    space = MetricPointSet.euclidean(xs)
    lo = np.arange(R) / R
    weights = np.zeros((N, len(xs)))
    for n in range(1, N + 1):
        # exact mass of n I[0, 1/n] dnu on each cell [k/R, (k+1)/R), placed at the cell midpoint
        weights[n - 1, 1:] = n * np.clip(np.minimum(lo + 1.0 / R, 1.0 / n) - lo, 0.0, None)
    mu = AtomicMeasure.dirac(space, 0.0)
    seq = MeasureSequence(space, weights, mu)
    n = np.arange(1, N + 1)[:, None]
    ramps = np.minimum(n * xs[None, :], 1.0)
    Q = quarter_start(N)
    tols = {"tv": TOL, "setwise": TOL, "weak": LIPSCHITZ_BOUND / (2 * Q) + TOL}
    return space, seq, ramps, tols


def left_endpoint_ramp_error(resolution: int, n: int) -> float:
    """|int min(n s, 1) dmu_n - 1/2| when the density is rendered at left endpoints k/R (n divides R)."""
    R = resolution
    if R % n:
        raise InputError("left-endpoint rendering needs n to divide the resolution")
    left = np.arange(R) / R
    w = np.where(left < 1.0 / n, n / R, 0.0)
    return abs(math.fsum(np.minimum(n * left, 1.0) * w) - 0.5)


def _monotone_quantities(inst: TheoremInstance, v: Verdict) -> dict:
    ints = inst.integrals()
    return {
        "min_integral": float(ints.min()),
        "max_integral": float(ints.max()),
        "limit_integral": v.quantities.get("limit_integral"),
    }


def ramp_point_mass(resolution: int = 4096, horizon: int = 64) -> Fixture:
    """f_n = min(n s, 1) increasing to I{s > 0}, whose limit is not upper semicontinuous at 0."""
    _check_resolution(resolution)
    space, seq, ramps, tols = _collapsing_setup(resolution, horizon)
    xs = np.asarray(space.coords)
    fam = FunctionFamily(space, ramps, (xs > 0).astype(float), name="ramps")
    inst = TheoremInstance(fam, seq, convergence_tol=tols["weak"], assume_lsc=True)
    R = resolution

    def run(fx: Fixture):
        inst = fx.instance
        checks = mode_checks(inst.seq, fx.tolerances)
        v = run_engine("monotone_weak", inst)
        usc = v.child("usc_limit")
        q = _monotone_quantities(inst, v)
        q.update({
            "usc_limit_status": usc.status,
            "limit_upper_semicontinuous": usc.hypothesis_report["limit_upper_semicontinuous"],
            "weak_convergence": checks[2].status,
            "left_endpoint_error": left_endpoint_ramp_error(R, inst.fam.n_max),
        })
        return q, checks + [v, run_engine("lebesgue_weak", inst)]

    expected = (
        Expected("min_integral", 0.5, 2.0 / R),
        Expected("max_integral", 0.5, 2.0 / R),
        Expected("limit_integral", 0.0),
        Expected("usc_limit_status", "inapplicable", None),
        Expected("limit_upper_semicontinuous", False, None),
        Expected("weak_convergence", "pass", None),
        Expected("left_endpoint_error", horizon / (2.0 * R), 1e-12, "left-endpoint rendering error is N/(2R)"),
    )
    return Fixture(
        "ramp-point-mass", "monotone ramps with a limit that is not upper semicontinuous",
        R, expected, run, instance=inst, tolerances=tols, params={"horizon": horizon},
    )


def ramp_point_mass_lifted(resolution: int = 4096, horizon: int = 64) -> Fixture:
    """f_n = 1 at 0 and min(n s, 1) elsewhere, increasing to 1; the lower envelopes vanish at 0."""
    _check_resolution(resolution)
    space, seq, ramps, tols = _collapsing_setup(resolution, horizon)
    vals = ramps.copy()
    vals[:, 0] = 1.0
    fam = FunctionFamily(space, vals, np.ones(len(space)), name="lifted ramps")
    inst = TheoremInstance(fam, seq, convergence_tol=tols["weak"])
    R = resolution

    def run(fx: Fixture):
        inst = fx.instance
        checks = mode_checks(inst.seq, fx.tolerances)
        v = run_engine("monotone_weak", inst)
        env = v.child("lower_envelope")
        q = _monotone_quantities(inst, v)
        q.update({
            "lower_envelope_status": env.status,
            "envelope_lower_semi_convergence": env.hypothesis_report["envelope_lower_semi_convergence"],
            "other_envelope_hypotheses": all(ok for k, ok in env.hypothesis_report.items() if k != "envelope_lower_semi_convergence"),
        })
        return q, checks + [v]

    expected = (
        Expected("min_integral", 0.5, 2.0 / R),
        Expected("max_integral", 0.5, 2.0 / R),
        Expected("limit_integral", 1.0),
        Expected("lower_envelope_status", "inapplicable", None),
        Expected("envelope_lower_semi_convergence", False, None),
        Expected("other_envelope_hypotheses", True, None),
    )
    return Fixture(
        "ramp-point-mass-lifted", "monotone ramps lifted at 0, violating lower semi-convergence of the envelopes",
        R, expected, run, instance=inst, tolerances=tols, params={"horizon": horizon},
    )


# ---------------------------------------------------------------------------
# MDP fixtures


def _single_action_absorbing(space: MetricPointSet, cost: np.ndarray) -> mdp.MdpModel:
    S = len(space)
    kernel = np.zeros((S, 1, S))
    kernel[:, 0, 0] = 1.0
    return mdp.MdpModel(space, ["a1"], cost[:, None], kernel)


def absorbing_indicator_model(resolution: int = 64) -> mdp.MdpModel:
    """States 0 and 1/16 + k/resolution in [0, 1]; one action; jump to 0; cost I{x != 0}."""
    xs = np.concatenate([[0.0], np.arange(1 / 16, 1.0 + 1e-12, 1.0 / resolution)])
    space = MetricPointSet.euclidean(xs)
    return _single_action_absorbing(space, (xs != 0).astype(float))


def absorbing_tagged_model(resolution: int = 16) -> mdp.MdpModel:
    """Rational- and irrational-tagged copies of k/resolution; cost 0 on rational tags and 1 otherwise."""
    states = [(0.0, "rational")]
    for k in range(1, resolution + 1):
        x = k / resolution
        states += [(x, "rational"), (x, "irrational")]
    space = mdp.tagged_space(states)
    cost = np.array([0.0 if t == "rational" else 1.0 for _, t in space.points])
    return _single_action_absorbing(space, cost)


def _mdp_core(model: mdp.MdpModel, alphas=None):
    sweep = mdp.vanishing_discount_sweep(model, alphas)
    oracle = mdp.average_cost_oracle(model)
    rel = mdp.limit_relative_value(sweep, model, "pointwise")
    gaps, pol = mdp.acoe_residual(model, rel.u, oracle.w_star)
    return sweep, oracle, rel, gaps, pol


def absorbing_indicator_mdp(resolution: int = 64) -> Fixture:
    model = absorbing_indicator_model(resolution)

    def run(fx: Fixture):
        model = fx.model
        sweep, oracle, rel, gaps, pol = _mdp_core(model)
        target = (np.asarray(model.states.coords) != 0).astype(float)
        lec = mdp.assumption_LEC_check(sweep, model)
        ec = mdp.assumption_EC_check(sweep, model)
        b = mdp.assumption_B_check(sweep, oracle.w_star)
        double = mdp.limit_relative_value(sweep, model, "double")
        chain = mdp.average_cost_chain_check(sweep, model, oracle.w_star, pol)
        q = {
            "u_alpha_is_indicator": bool(np.array_equal(sweep.u, np.broadcast_to(target, sweep.u.shape))),
            "v_alpha_is_indicator": bool(np.array_equal(sweep.values, np.broadcast_to(target, sweep.values.shape))),
            "w_lower": sweep.w_lower,
            "w_upper": sweep.w_upper,
            "w_star": oracle.w_star,
            "acoe_max_gap": float(gaps.max()),
            "acoi_max_residual": float(mdp.acoi_residual(model, rel.u, oracle.w_star, pol).max()),
            "LEC": lec.status,
            "EC": ec.status,
            "B": b.status,
            "u_bound": b.quantities["max_bound"],
            "relative_value_modes_agree": double.modes_agree,
        }
        return q, [b, lec, ec, chain]

    expected = (
        Expected("u_alpha_is_indicator", True, None),
        Expected("v_alpha_is_indicator", True, None),
        Expected("w_lower", 0.0, 0.0),
        Expected("w_upper", 0.0, 0.0),
        Expected("w_star", 0.0),
        Expected("acoe_max_gap", 0.0, 0.0),
        Expected("acoi_max_residual", 0.0, 0.0),
        Expected("LEC", "pass", None),
        Expected("EC", "fail", None),
        Expected("B", "pass", None),
        Expected("u_bound", 1.0, 0.0),
        Expected("relative_value_modes_agree", True, None),
    )
    return Fixture("absorbing-indicator-mdp", "absorbing chain with indicator cost", resolution, expected, run, model=model)


def absorbing_tagged_mdp(resolution: int = 16) -> Fixture:
    model = absorbing_tagged_model(resolution)

    def run(fx: Fixture):
        model = fx.model
        sweep, oracle, rel, gaps, pol = _mdp_core(model)
        D = np.array([0.0 if t == "rational" else 1.0 for _, t in model.states.points])
        lec = mdp.assumption_LEC_check(sweep, model)
        q = {
            "u_is_tag_indicator": bool(np.array_equal(rel.u, D)),
            "w_star": oracle.w_star,
            "acoe_max_gap": float(gaps.max()),
            "LEC_i": lec.child("LEC_i").status,
            "LEC_ii": lec.child("LEC_ii").status,
            "LEC_iii": lec.child("LEC_iii").status,
        }
        return q, [lec, mdp.assumption_EC_check(sweep, model), mdp.assumption_B_check(sweep, oracle.w_star)]

    expected = (
        Expected("u_is_tag_indicator", True, None),
        Expected("w_star", 0.0),
        Expected("acoe_max_gap", 0.0, 0.0),
        Expected("LEC_i", "fail", None),
        Expected("LEC_ii", "pass", None),
        Expected("LEC_iii", "pass", None),
    )
    return Fixture("absorbing-tagged-mdp", "absorbing chain with a tag-indicator cost", resolution, expected, run, model=model)


# ---------------------------------------------------------------------------
# Registry


BUILDERS: dict[str, Callable[[], Fixture]] = {
    "alternating-bumps": alternating_bumps,
    "ramp-to-indicator": ramp_to_indicator,
    "split-metric-windows": split_metric_windows,
    "oscillating-density-windows": oscillating_density_windows,
    "ramp-point-mass": ramp_point_mass,
    "ramp-point-mass-lifted": ramp_point_mass_lifted,
    "absorbing-indicator-mdp": absorbing_indicator_mdp,
    "absorbing-tagged-mdp": absorbing_tagged_mdp,
}

ALIASES = {
    "example-3-1": "alternating-bumps",
    "example-3-2": "ramp-to-indicator",
    "example-4-1": "split-metric-windows",
    "example-4-2": "oscillating-density-windows",
    "example-5-1": "ramp-point-mass",
    "example-5-2": "ramp-point-mass-lifted",
    "example-6-1": "absorbing-indicator-mdp",
    "example-6-2": "absorbing-tagged-mdp",
}


def fixture_names() -> list[str]:
    return list(BUILDERS)


def resolve(name: str) -> str:
    key = ALIASES.get(name, name)
    if key not in BUILDERS:
        raise InputError(f"unknown fixture {name!r}; known: {', '.join(list(BUILDERS) + list(ALIASES))}")
    return key


def build(name: str) -> Fixture:
    return BUILDERS[resolve(name)]()
