"""Verdict engines for Fatou, Lebesgue and monotone convergence statements under varying measures.

Every engine evaluates the hypotheses of one statement on a finite instance
and then its conclusion. A failed hypothesis makes the verdict inapplicable;
a failed conclusion under passing hypotheses is a bug. liminf / limsup / lim
of integral sequences are read over the tail n >= N_max/2, and mu-a.e.
statements over atoms of positive mu-weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import semicontinuity as sc
from .convergence import aui_values, check_k, setwise_convergence_check, tv_convergence_check, weak_convergence_check
from .families import FunctionFamily, MeasureSequence, check_compatible, check_eps, check_radii, dyadic_eps, dyadic_radii, tail_start
from .measure import INF, InputError, ext_close, integrate_array
from .report import BUG, INAPPLICABLE, PASS, Verdict, combine_status, hypothesis_status


class _Undefined(Exception):
    pass


@dataclass
class TheoremInstance:
    """A family, a measure sequence and the numerical settings of one theorem check.

    tol is the tolerance for the conclusion and for integral hypotheses;
    convergence_tol (default tol) is used for the measure-convergence
    preconditions. assume_lsc asserts lower semicontinuity of each f_n
    (None: check it numerically on the finest admissible balls).
    """

    fam: FunctionFamily
    seq: MeasureSequence
    minorant: FunctionFamily | None = None
    radii: tuple | None = None
    tol: float = 1e-9
    convergence_tol: float | None = None
    eps_schedule: tuple | None = None
    K_schedule: tuple | None = None
    sets: Any = None
    tests: Any = None
    seed: int = 0
    assume_lsc: bool | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        check_compatible(self.fam, self.seq)
        if self.minorant is not None:
            check_compatible(self.minorant, self.seq)
        self.eps = check_eps(dyadic_eps() if self.eps_schedule is None else self.eps_schedule)
        self.K = check_k(self.K_schedule)

    @property
    def ctol(self) -> float:
        return self.tol if self.convergence_tol is None else self.convergence_tol

    def cached(self, key: str, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # measure-convergence preconditions -----------------------------------

    def weak(self) -> Verdict:
        return self.cached("weak", lambda: weak_convergence_check(self.seq, self.tests, self.ctol, self.seed))

    def setwise(self) -> Verdict:
        return self.cached("setwise", lambda: setwise_convergence_check(self.seq, self.sets, self.ctol, self.seed))

    def tv(self) -> Verdict:
        return self.cached("tv", lambda: tv_convergence_check(self.seq, self.ctol))

    # shared quantities ----------------------------------------------------

    def integrals(self) -> np.ndarray:
        """int f_n dmu_n for n = 1..N_max."""
        return self.cached("ints", lambda: _seq_integrals(self.fam.values, self.seq.weights, "int f_n dmu_n"))

    def limit(self) -> np.ndarray:
        return self.fam.require_limit()

    def mu_integral(self, values: np.ndarray, what: str) -> float:
        ok, v = integrate_array(values, self.seq.limit.weights)
        if not bool(ok):
            raise _Undefined(what)
        return float(v)

    def aui(self, values: np.ndarray) -> bool:
        return aui_values(values, self.seq.weights, self.K, self.tol).passed

    def aui_negative_part(self) -> bool:
        return self.cached("aui_neg", lambda: self.aui(np.maximum(-self.fam.values, 0.0)))

    def aui_abs(self) -> bool:
        return self.cached("aui_abs", lambda: self.aui(np.abs(self.fam.values)))

    def lsec(self) -> bool:
        return self.cached("lsec", lambda: sc.lsec_check(self.fam, self.eps, self.radii).passed)

    def usec(self) -> bool:
        return self.cached("usec", lambda: sc.usec_check(self.fam, self.eps, self.radii).passed)

    def semi_convergence(self, direction: str) -> bool:
        return self.cached(
            f"semi_{direction}",
            lambda: sc.semi_convergence_in_measure_check(self.fam, self.seq.limit, self.eps, direction, self.tol).passed,
        )


def _seq_integrals(values: np.ndarray, weights: np.ndarray, what: str) -> np.ndarray:
    ok, v = integrate_array(values, weights)
    if not ok.all():
        raise _Undefined(what)
    return v


def _tail(x: np.ndarray) -> np.ndarray:
    return x[tail_start(len(x)) - 1:]


def _liminf(x: np.ndarray) -> float:
    return float(_tail(x).min())


def _limsup(x: np.ndarray) -> float:
    return float(_tail(x).max())


def _lim_equals(x: np.ndarray, target: float, tol: float) -> bool:
    return all(ext_close(float(v), target, tol) for v in _tail(x))


def _leq(a: float, b: float, tol: float) -> bool:
    return a <= b + tol


def _verdict(check_id: str, inst: TheoremInstance, hyps: dict, conclusion: bool, q: dict, assumptions=None) -> Verdict:
    return Verdict(
        check_id,
        hypothesis_status(hyps, conclusion),
        quantities=q,
        hypothesis_report=hyps,
        horizon=inst.fam.n_max,
        tolerance=inst.tol,
        assumptions=list(assumptions or []),
    )


def _undefined(check_id: str, inst: TheoremInstance, hyps: dict, reason: str) -> Verdict:
    v = Verdict(check_id, INAPPLICABLE, hypothesis_report=dict(hyps, integrals_defined=False), horizon=inst.fam.n_max, tolerance=inst.tol)
    v.details["reason"] = f"undefined integral: {reason}"
    return v


def _parent(check_id: str, inst: TheoremInstance, children: list[Verdict], q: dict | None = None) -> Verdict:
    return Verdict(check_id, combine_status(children), quantities=q or {}, horizon=inst.fam.n_max, tolerance=inst.tol, children=children)


def _minorant_condition(inst: TheoremInstance, joint: bool) -> tuple[bool, dict]:
    """-inf < int limsup g_n dmu <= liminf int g_n dmu_n with f_n >= g_n.

    joint=True uses the double upper limit over (n, s'), otherwise the
    pointwise upper limit. Without a supplied minorant the canonical
    candidate g_n = -f_n^- is tried.
    """
    g = inst.minorant.values if inst.minorant is not None else -np.maximum(-inst.fam.values, 0.0)
    q: dict = {}
    if not (g <= inst.fam.values).all() or not np.isfinite(g).all():
        return False, {"minorant_below_family": False}
    gfam = FunctionFamily(inst.fam.space, g)
    upper = sc.double_upper_limits(gfam, inst.radii) if joint else sc.pointwise_upper_limits(gfam)
    try:
        A = inst.mu_integral(upper, "minorant upper limit")
        B = _liminf(_seq_integrals(g, inst.seq.weights, "minorant integrals"))
    except _Undefined:
        return False, {"minorant_integrals_defined": False}
    q["minorant_upper_integral"] = A
    q["minorant_liminf_integral"] = B
    return (A > -INF and _leq(A, B, inst.tol)), q


def _real_valued(x: np.ndarray) -> bool:
    return bool(np.isfinite(x).all())


# ---------------------------------------------------------------------------
# Fatou's lemma for weakly converging measures


def fatou_weak_double(inst: TheoremInstance) -> Verdict:
    """int (double lower limit of f_n) dmu <= liminf int f_n dmu_n."""
    cid = "fatou_weak_double"
    hyps = {"weak_convergence": inst.weak().passed}
    try:
        L = inst.mu_integral(sc.double_lower_limits(inst.fam, inst.radii), "double lower limit")
        R = _liminf(inst.integrals())
    except _Undefined as exc:
        return _undefined(cid, inst, hyps, str(exc))
    aui = inst.aui_negative_part()
    mino, mq = _minorant_condition(inst, joint=True) if inst.minorant is not None else (False, {})
    hyps["negative_parts_aui_or_minorant"] = aui or mino
    q = {"double_lower_integral": L, "integral_liminf": R, "negative_parts_aui": aui, **mq}
    return _verdict(cid, inst, hyps, _leq(L, R, inst.tol), q, inst.weak().assumptions)


def fatou_classic_weak(inst: TheoremInstance) -> Verdict:
    """int f dmu <= liminf int f_n dmu_n for lower semi-equicontinuous f_n lower semi-converging to f."""
    cid = "fatou_classic_weak"
    f = inst.limit()
    hyps = {
        "weak_convergence": inst.weak().passed,
        "lower_semi_equicontinuous": inst.lsec(),
        "lower_semi_convergence_in_measure": inst.semi_convergence("lower"),
        "limit_real_valued": _real_valued(f),
    }
    try:
        J = inst.mu_integral(f, "limit integral")
        R = _liminf(inst.integrals())
    except _Undefined as exc:
        return _undefined(cid, inst, hyps, str(exc))
    aui = inst.aui_negative_part()
    mino, mq = _minorant_condition(inst, joint=True) if inst.minorant is not None else (False, {})
    hyps["negative_parts_aui_or_minorant"] = aui or mino
    q = {"limit_integral": J, "integral_liminf": R, "negative_parts_aui": aui, **mq}
    return _verdict(cid, inst, hyps, _leq(J, R, inst.tol), q, inst.weak().assumptions)


# ---------------------------------------------------------------------------
# Fatou's lemma for setwise converging measures


def fatou_setwise(inst: TheoremInstance) -> Verdict:
    """Three statements under setwise convergence: a.u.i. form, minorant form, classic pointwise form."""
    f = inst.limit()
    base = {"setwise_convergence": inst.setwise().passed}
    children = []
    try:
        J = inst.mu_integral(f, "limit integral")
        R = _liminf(inst.integrals())
    except _Undefined as exc:
        for cid in ("setwise_aui", "setwise_minorant", "setwise_pointwise"):
            children.append(_undefined(cid, inst, base, str(exc)))
        return _parent("fatou_setwise", inst, children)
    semi = inst.semi_convergence("lower")
    real = _real_valued(f)
    q = {"limit_integral": J, "integral_liminf": R}

    hyps = dict(base, lower_semi_convergence_in_measure=semi, limit_real_valued=real, negative_parts_aui=inst.aui_negative_part())
    children.append(_verdict("setwise_aui", inst, hyps, _leq(J, R, inst.tol), dict(q)))

    mino, mq = _minorant_condition(inst, joint=False)
    hyps = dict(base, lower_semi_convergence_in_measure=semi, limit_real_valued=real, minorant_condition=mino)
    children.append(_verdict("setwise_minorant", inst, hyps, _leq(J, R, inst.tol), dict(q, **mq)))

    try:
        P = inst.mu_integral(sc.pointwise_lower_limits(inst.fam), "pointwise lower limit")
        hyps = dict(base, minorant_condition=mino)
        children.append(_verdict("setwise_pointwise", inst, hyps, _leq(P, R, inst.tol), {"pointwise_lower_integral": P, "integral_liminf": R, **mq}))
    except _Undefined as exc:
        children.append(_undefined("setwise_pointwise", inst, base, str(exc)))
    return _parent("fatou_setwise", inst, children, q)


# ---------------------------------------------------------------------------
# Uniform Fatou gap under total variation


def atomwise_gaps(fam_values: np.ndarray, f: np.ndarray, weights: np.ndarray, limit_weights: np.ndarray) -> np.ndarray:
    """inf over sets C of (int_C f_n dmu_n - int_C f dmu) = sum over atoms of min(0, term)."""
    a = np.zeros_like(fam_values)
    np.multiply(fam_values, weights, out=a, where=weights > 0)
    b = np.zeros_like(f)
    np.multiply(f, limit_weights, out=b, where=limit_weights > 0)
    terms = np.minimum(0.0, a - b)
    return np.array([math.fsum(r) for r in terms])


def uniform_fatou_gap(fam: FunctionFamily, f, seq: MeasureSequence, tol: float = 1e-9, eps_schedule=None, K_schedule=None) -> Verdict:
    """liminf of the set-uniform Fatou gap >= 0 iff lower semi-convergence in measure and a.u.i. of f_n^-."""
    check_compatible(fam, seq)
    fv = np.asarray(f, dtype=float)
    fam = fam.with_limit(fv)
    cid = "uniform_fatou_gap"
    tv = tv_convergence_check(seq, tol)
    mu = seq.limit.weights
    integrable_f = bool(np.isfinite(fv[mu > 0]).all())
    integrable_n = bool(np.isfinite(np.where(seq.weights > 0, fam.values, 0.0)).all())
    hyps = {"tv_convergence": tv.passed, "limit_integrable": integrable_f, "terms_integrable": integrable_n}
    if not all(hyps.values()):
        return Verdict(cid, INAPPLICABLE, hypothesis_report=hyps, horizon=fam.n_max, tolerance=tol)
    eps = check_eps(dyadic_eps() if eps_schedule is None else eps_schedule)
    gaps = atomwise_gaps(fam.values, fv, seq.weights, mu)
    lim_gap = _liminf(gaps)
    conclusion = lim_gap >= -tol
    cond_i = sc.semi_convergence_in_measure_check(fam, seq.limit, eps, "lower", tol).passed
    cond_ii = aui_values(np.maximum(-fam.values, 0.0), seq.weights, K_schedule, tol).passed
    agree = conclusion == (cond_i and cond_ii)
    return Verdict(
        cid,
        PASS if agree else BUG,
        quantities={
            "liminf_gap": lim_gap,
            "gap_holds": conclusion,
            "lower_semi_convergence_in_measure": cond_i,
            "negative_parts_aui": cond_ii,
        },
        hypothesis_report=hyps,
        horizon=fam.n_max,
        tolerance=tol,
        details={"gaps": [float(x) for x in gaps]},
    )


# ---------------------------------------------------------------------------
# Lebesgue's convergence theorem


def lebesgue_weak(inst: TheoremInstance) -> Verdict:
    """lim int f_n dmu_n equals the integral of the limit, under weak convergence."""
    weak = inst.weak().passed
    children = []
    try:
        ints = inst.integrals()
    except _Undefined as exc:
        base = {"weak_convergence": weak}
        return _parent("lebesgue_weak", inst, [_undefined("double_limit", inst, base, str(exc)), _undefined("equicontinuous", inst, base, str(exc))])
    q = {"integral_liminf": _liminf(ints), "integral_limsup": _limsup(ints)}
    aui = inst.aui_abs()

    dll = sc.double_lower_limits(inst.fam, inst.radii)
    dul = sc.double_upper_limits(inst.fam, inst.radii)
    live = inst.seq.limit.weights > 0
    exists = all(ext_close(a, b, inst.tol) for a, b in zip(dll[live], dul[live]))
    hyps = {"weak_convergence": weak, "aui": aui, "double_limit_exists": exists}
    try:
        D = inst.mu_integral(np.where(live, dll, 0.0), "double limit")
        children.append(_verdict("double_limit", inst, hyps, _lim_equals(ints, D, inst.tol), dict(q, double_limit_integral=D)))
    except _Undefined as exc:
        children.append(_undefined("double_limit", inst, hyps, str(exc)))

    if inst.fam.limit is not None:
        f = inst.fam.limit
        hyps = {
            "weak_convergence": weak,
            "lower_semi_equicontinuous": inst.lsec(),
            "upper_semi_equicontinuous": inst.usec(),
            "convergence_in_measure": inst.semi_convergence("both"),
            "aui": aui,
            "limit_real_valued": _real_valued(f),
        }
        try:
            J = inst.mu_integral(f, "limit integral")
            children.append(_verdict("equicontinuous", inst, hyps, _lim_equals(ints, J, inst.tol), dict(q, limit_integral=J)))
        except _Undefined as exc:
            children.append(_undefined("equicontinuous", inst, hyps, str(exc)))
    return _parent("lebesgue_weak", inst, children, q)


def lebesgue_setwise(inst: TheoremInstance) -> Verdict:
    cid = "lebesgue_setwise"
    f = inst.limit()
    hyps = {
        "setwise_convergence": inst.setwise().passed,
        "convergence_in_measure": inst.semi_convergence("both"),
        "aui": inst.aui_abs(),
        "limit_real_valued": _real_valued(f),
    }
    try:
        ints = inst.integrals()
        J = inst.mu_integral(f, "limit integral")
    except _Undefined as exc:
        return _undefined(cid, inst, hyps, str(exc))
    q = {"integral_liminf": _liminf(ints), "integral_limsup": _limsup(ints), "limit_integral": J}
    return _verdict(cid, inst, hyps, _lim_equals(ints, J, inst.tol), q)


# ---------------------------------------------------------------------------
# Monotone convergence


def _monotone_limit(inst: TheoremInstance) -> np.ndarray:
    return inst.fam.limit if inst.fam.limit is not None else inst.fam.values[-1]


def _nondecreasing(inst: TheoremInstance) -> bool:
    v = inst.fam.values
    return bool((v[1:] >= v[:-1]).all())


def _settled(inst: TheoremInstance, f: np.ndarray) -> bool:
    t = _tail(inst.fam.values)
    return all(ext_close(a, b, inst.tol) for a, b in zip(t.ravel(), np.broadcast_to(f, t.shape).ravel()))


def _balls(inst: TheoremInstance):
    return inst.fam.space.finest_balls(check_radii(dyadic_radii() if inst.radii is None else inst.radii))


def _usc(inst: TheoremInstance, f: np.ndarray) -> bool:
    balls = _balls(inst)
    top = balls.ball_max(f)
    return all(_leq(a, b, inst.tol) for a, b in zip(top, f))


def _single_aui(inst: TheoremInstance, g: np.ndarray) -> bool:
    return inst.aui(np.broadcast_to(g, inst.fam.values.shape))


def monotone_weak(inst: TheoremInstance) -> Verdict:
    """Monotone convergence under weak convergence: upper semicontinuous limit form and lower envelope form."""
    if not _nondecreasing(inst):
        hyps = {"nondecreasing": False}
        return _parent("monotone_weak", inst, [_verdict("usc_limit", inst, hyps, True, {}), _verdict("lower_envelope", inst, hyps, True, {})])
    f = _monotone_limit(inst)
    weak = inst.weak().passed
    try:
        ints = inst.integrals()
        J = inst.mu_integral(f, "limit integral")
    except _Undefined as exc:
        base = {"nondecreasing": True, "weak_convergence": weak}
        return _parent("monotone_weak", inst, [_undefined("usc_limit", inst, base, str(exc)), _undefined("lower_envelope", inst, base, str(exc))])
    q = {"integral_liminf": _liminf(ints), "integral_limsup": _limsup(ints), "limit_integral": J}
    conclusion = _lim_equals(ints, J, inst.tol)
    usc = _usc(inst, f)
    f_plus_aui = _single_aui(inst, np.maximum(f, 0.0))

    if inst.assume_lsc is None:
        balls = _balls(inst)
        lsc = bool(sc.lsc_points(inst.fam.values, balls, inst.eps).all())
        lsc_note = "lower semicontinuity of each f_n checked on the finest admissible balls"
    else:
        lsc = bool(inst.assume_lsc)
        lsc_note = "lower semicontinuity of each f_n is caller-asserted"
    hyps = {
        "nondecreasing": True,
        "weak_convergence": weak,
        "terms_lower_semicontinuous": lsc,
        "limit_upper_semicontinuous": usc,
        "first_negative_part_aui": _single_aui(inst, np.maximum(-inst.fam.values[0], 0.0)),
        "limit_positive_part_aui": f_plus_aui,
        "limit_settled_on_tail": _settled(inst, f),
    }
    children = [_verdict("usc_limit", inst, hyps, conclusion, dict(q), [lsc_note])]

    env = sc.lower_envelope(inst.fam, inst.radii)
    env_fam = FunctionFamily(inst.fam.space, env, f)
    env_semi = sc.semi_convergence_in_measure_check(env_fam, inst.seq.limit, inst.eps, "lower", inst.tol)
    hyps = {
        "nondecreasing": True,
        "weak_convergence": weak,
        "limit_real_valued_and_usc": usc and _real_valued(f),
        "envelope_lower_semi_convergence": env_semi.passed,
        "envelope_first_negative_part_aui": _single_aui(inst, np.maximum(-env[0], 0.0)),
        "limit_positive_part_aui": f_plus_aui,
    }
    children.append(_verdict("lower_envelope", inst, hyps, conclusion, dict(q, envelope_tail_mass=env_semi.quantities["lower_max_tail_mass"])))
    return _parent("monotone_weak", inst, children, q)


def monotone_setwise(inst: TheoremInstance) -> Verdict:
    cid = "monotone_setwise"
    if not _nondecreasing(inst):
        return _verdict(cid, inst, {"nondecreasing": False}, True, {})
    f = _monotone_limit(inst)
    hyps = {
        "nondecreasing": True,
        "setwise_convergence": inst.setwise().passed,
        "first_negative_part_aui": _single_aui(inst, np.maximum(-inst.fam.values[0], 0.0)),
        "limit_positive_part_aui": _single_aui(inst, np.maximum(f, 0.0)),
        "limit_settled_on_tail": _settled(inst, f),
    }
    try:
        ints = inst.integrals()
        J = inst.mu_integral(f, "limit integral")
    except _Undefined as exc:
        return _undefined(cid, inst, hyps, str(exc))
    q = {"integral_liminf": _liminf(ints), "integral_limsup": _limsup(ints), "limit_integral": J}
    return _verdict(cid, inst, hyps, _lim_equals(ints, J, inst.tol), q)


ENGINES = {
    "fatou_weak_double": fatou_weak_double,
    "fatou_classic_weak": fatou_classic_weak,
    "fatou_setwise": fatou_setwise,
    "lebesgue_weak": lebesgue_weak,
    "lebesgue_setwise": lebesgue_setwise,
    "monotone_weak": monotone_weak,
    "monotone_setwise": monotone_setwise,
}


def run_engine(name: str, inst: TheoremInstance) -> Verdict:
    try:
        engine = ENGINES[name]
    except KeyError:
        raise InputError(f"unknown engine {name!r}") from None
    return engine(inst)
