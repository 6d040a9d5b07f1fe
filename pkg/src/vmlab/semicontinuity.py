"""Double lower limits, semi-equicontinuity and semi-convergence on finite metric point sets.

Finite rendering used throughout:

* the tail of a sequence is n >= ceil(N_max / 2);
* the ball at s is the finest admissible ball B*(s): the open ball whose radius
  is the smallest schedule radius strictly above the nearest-neighbour
  distance of s (a singleton when no schedule radius exceeds it). Shrinking
  the radius further only leaves {s}, so B*(s) is where every finite-grid
  statement about s' -> s is decided.
"""

from __future__ import annotations

from typing import Hashable, Sequence

import numpy as np

from .families import FunctionFamily, check_eps, check_radii, dyadic_eps, dyadic_radii, tail_start
from .measure import INF, AtomicMeasure, BallSystem, InputError, ext_close
from .report import BUG, FAIL, INAPPLICABLE, PASS, Verdict

MAX_WITNESSES = 32


def _balls(fam: FunctionFamily, radii) -> BallSystem:
    r = check_radii(dyadic_radii() if radii is None else radii)
    return fam.space.finest_balls(r)


def _eps(eps) -> tuple[float, ...]:
    return check_eps(dyadic_eps() if eps is None else eps)


# ---------------------------------------------------------------------------
# Lower limits


def pointwise_lower_limits(fam: FunctionFamily) -> np.ndarray:
    """Tail minimum of f_n(s) for every s."""
    return fam.tail.min(axis=0)


def pointwise_upper_limits(fam: FunctionFamily) -> np.ndarray:
    return fam.tail.max(axis=0)


def double_lower_limits(fam: FunctionFamily, radii=None) -> np.ndarray:
    """min over k in the tail and s' in B*(s) of f_k(s'), for every s.

    This is the sup-inf formula with the sup over start indices taken at the
    tail start and the sup over radii attained at the finest admissible ball.
    """
    return _balls(fam, radii).ball_min(pointwise_lower_limits(fam))


def double_upper_limits(fam: FunctionFamily, radii=None) -> np.ndarray:
    return -double_lower_limits(fam.negated(), radii)


def double_lower_limit(fam: FunctionFamily, s: Hashable, radii=None) -> float:
    return float(double_lower_limits(fam, radii)[fam.space.index(s)])


def pointwise_lower_limit(fam: FunctionFamily, s: Hashable) -> float:
    return float(pointwise_lower_limits(fam)[fam.space.index(s)])


def pointwise_upper_limit(fam: FunctionFamily, s: Hashable) -> float:
    return float(pointwise_upper_limits(fam)[fam.space.index(s)])


def lower_envelope(fam: FunctionFamily, radii=None) -> np.ndarray:
    """Per-n lower envelope min over B*(s) of f_n, as an (N_max, |S|) array."""
    return _balls(fam, radii).ball_min(fam.values)


# ---------------------------------------------------------------------------
# Semi-equicontinuity


def _threshold(center: np.ndarray, eps: float) -> np.ndarray:
    """Largest value of f_n(s') that violates f_n(s') > f_n(s) - eps.

    For f_n(s) = +inf the neighbourhood of +inf is (1/eps, +inf]; for
    f_n(s) = -inf nothing can violate.
    """
    out = center - eps
    out = np.where(center == INF, 1.0 / eps, out)
    return out


def lsec_margins(fam: FunctionFamily, eps: Sequence[float], radii=None):
    """Per point, the set of violated epsilons and witness triples.

    Returns (violated[e, s] bool, witnesses list).
    """
    balls = _balls(fam, radii)
    vals = fam.values
    nmin, arg = balls.punctured_min(vals)
    violated = np.zeros((len(eps), vals.shape[1]), dtype=bool)
    witnesses = []
    for e, ep in enumerate(eps):
        bad = nmin <= _threshold(vals, ep)
        violated[e] = bad.any(axis=0)
        if len(witnesses) < MAX_WITNESSES:
            ns, ss = np.nonzero(bad)
            order = np.lexsort((ns, ss))
            for k in order[: MAX_WITNESSES - len(witnesses)]:
                n, s = int(ns[k]), int(ss[k])
                sp = int(arg[n, s])
                witnesses.append({
                    "s": fam.space.points[s],
                    "eps": ep,
                    "n": n + 1,
                    "s_prime": fam.space.points[sp],
                    "f_n_s_prime": float(vals[n, sp]),
                    "f_n_s": float(vals[n, s]),
                })
    return violated, witnesses


def lsec_check(fam: FunctionFamily, eps_schedule=None, radii=None, check_id: str = "lsec") -> Verdict:
    """Lower semi-equicontinuity at every point of the space, per epsilon in the schedule."""
    eps = _eps(eps_schedule)
    violated, witnesses = lsec_margins(fam, eps, radii)
    bad_points = violated.any(axis=0)
    return Verdict(
        check_id,
        FAIL if bad_points.any() else PASS,
        quantities={"failing_points": int(bad_points.sum()), "points": len(fam.space)},
        horizon=fam.n_max,
        details={
            "failing": [fam.space.points[i] for i in np.flatnonzero(bad_points)[:MAX_WITNESSES]],
            "witnesses": witnesses,
        },
    )


def usec_check(fam: FunctionFamily, eps_schedule=None, radii=None) -> Verdict:
    return lsec_check(fam.negated(), eps_schedule, radii, check_id="usec")


def lsec_points(fam: FunctionFamily, eps_schedule=None, radii=None) -> np.ndarray:
    """Boolean per point: lower semi-equicontinuous for every epsilon in the schedule."""
    violated, _ = lsec_margins(fam, _eps(eps_schedule), radii)
    return ~violated.any(axis=0)


def lsc_points(values: np.ndarray, balls: BallSystem, eps: Sequence[float]) -> np.ndarray:
    """Lower semicontinuity of each single function (rows) at each point, on B*(s)."""
    nmin, _ = balls.punctured_min(values)
    ok = np.ones(values.shape, dtype=bool)
    for ep in eps:
        ok &= ~(nmin <= _threshold(values, ep))
    return ok


# ---------------------------------------------------------------------------
# Uniform semi-convergence and semi-convergence in measure


def uniform_semi_convergence_below_check(fam: FunctionFamily, eps_schedule=None) -> Verdict:
    """For each eps: the smallest N with f_n(s) > f(s) - eps for all s and all n >= N.

    Passes when that N lies within the tail start, so the inequality holds
    along the whole tail of the horizon.
    """
    f = fam.require_limit()
    eps = _eps(eps_schedule)
    vals = fam.values
    T = tail_start(fam.n_max)
    minimal = {}
    witnesses = []
    ok = True
    for ep in eps:
        bad = (vals <= _threshold(f[None, :], ep)).any(axis=1)
        idx = np.flatnonzero(bad)
        N = int(idx[-1]) + 2 if len(idx) else 1
        minimal[repr(ep)] = N
        if N > T:
            ok = False
            n = int(idx[-1])
            s = int(np.flatnonzero(vals[n] <= _threshold(f, ep))[0])
            if len(witnesses) < MAX_WITNESSES:
                witnesses.append({"eps": ep, "n": n + 1, "s": fam.space.points[s], "f_n_s": float(vals[n, s]), "f_s": float(f[s])})
    return Verdict(
        "uniform_semi_convergence_below",
        PASS if ok else FAIL,
        quantities={"max_minimal_N": max(minimal.values()), "tail_start": T},
        horizon=fam.n_max,
        details={"minimal_N": minimal, "witnesses": witnesses},
    )


def semi_convergence_masses(values: np.ndarray, f: np.ndarray, weights: np.ndarray, eps: Sequence[float], direction: str) -> np.ndarray:
    """m[e, n] = mu{f_n <= f - eps} (lower) or mu{f_n >= f + eps} (upper)."""
    out = np.zeros((len(eps), values.shape[0]))
    for e, ep in enumerate(eps):
        if direction == "lower":
            hit = values <= f - ep
        else:
            hit = values >= f + ep
        out[e] = (hit * weights).sum(axis=1)
    return out


def semi_convergence_in_measure_check(fam: FunctionFamily, mu: AtomicMeasure, eps_schedule=None, direction: str = "lower", tol: float = 1e-9) -> Verdict:
    """m_n(eps) -> 0 over the tail for each eps; direction lower, upper or both."""
    f = fam.require_limit()
    if direction not in ("lower", "upper", "both"):
        raise InputError(f"unknown direction {direction!r}")
    eps = _eps(eps_schedule)
    T = tail_start(fam.n_max)
    dirs = ("lower", "upper") if direction == "both" else (direction,)
    q = {}
    ok = True
    for d in dirs:
        m = semi_convergence_masses(fam.values, f, mu.weights, eps, d)
        worst = float(m[:, T - 1:].max())
        q[f"{d}_max_tail_mass"] = worst
        ok &= worst <= tol
    return Verdict(
        f"semi_convergence_in_measure_{direction}",
        PASS if ok else FAIL,
        quantities=q,
        horizon=fam.n_max,
        tolerance=tol,
    )


# ---------------------------------------------------------------------------
# Equality of lower limits


def llim_equality_check(fam: FunctionFamily, radii=None, eps_schedule=None, tol: float = 1e-9) -> Verdict:
    """Relates (a) lsec at s, (b) double = pointwise lower limit at s, (c) convergence of f_n(s).

    Asserts (a) => (b) and (b) and (c) and per-n lower semicontinuity => (a).
    (b) is judged within the smallest epsilon of the schedule, which is the
    resolution at which (a) is decided.
    """
    eps = _eps(eps_schedule)
    balls = _balls(fam, radii)
    a = lsec_points(fam, eps, radii)
    dll = double_lower_limits(fam, radii)
    pll = pointwise_lower_limits(fam)
    res = max(tol, min(eps))
    b = np.array([
        (d > 1.0 / min(eps)) if (p == INF and d != INF) else ext_close(d, p, res)
        for d, p in zip(dll, pll)
    ])
    hi = pointwise_upper_limits(fam)
    c = np.array([ext_close(x, y, tol) for x, y in zip(hi, pll)])
    lsc_all = lsc_points(fam.values, balls, eps).all(axis=0)
    fwd = a & ~b
    back = b & c & lsc_all & ~a
    viol = fwd | back
    names = fam.space.points
    return Verdict(
        "llim_equality",
        BUG if viol.any() else PASS,
        quantities={
            "lsec_points": int(a.sum()),
            "equality_points": int(b.sum()),
            "convergent_points": int(c.sum()),
            "forward_violations": int(fwd.sum()),
            "converse_violations": int(back.sum()),
        },
        horizon=fam.n_max,
        tolerance=tol,
        details={"per_point": {repr(names[i]): {"a": bool(a[i]), "b": bool(b[i]), "c": bool(c[i])} for i in range(min(len(names), MAX_WITNESSES))}},
    )


def monotone_double_limit_check(fam: FunctionFamily, radii=None, tol: float = 1e-9) -> Verdict:
    """For a nondecreasing family: double lower limit equals the limit f_N(s) at every s."""
    inc = bool((np.diff(fam.values, axis=0) >= 0).all())
    if not inc:
        return Verdict("monotone_double_limit", INAPPLICABLE, hypothesis_report={"nondecreasing": False}, horizon=fam.n_max, tolerance=tol)
    dll = double_lower_limits(fam, radii)
    lim = fam.values[-1]
    eq = np.array([ext_close(x, y, tol) for x, y in zip(dll, lim)])
    gaps = np.where(eq, 0.0, np.abs(np.nan_to_num(dll - lim, nan=INF)))
    return Verdict(
        "monotone_double_limit",
        PASS if eq.all() else FAIL,
        quantities={"max_gap": float(gaps.max()), "mismatched_points": int((~eq).sum())},
        hypothesis_report={"nondecreasing": True},
        horizon=fam.n_max,
        tolerance=tol,
        details={"mismatched": [fam.space.points[i] for i in np.flatnonzero(~eq)[:MAX_WITNESSES]]},
    )


def tail_oscillation(values: np.ndarray) -> np.ndarray:
    """max - min over the tail per point; 0 where both ends are the same infinity."""
    t = values[tail_start(values.shape[0]) - 1:]
    hi, lo = t.max(axis=0), t.min(axis=0)
    same = hi == lo
    out = np.where(same, 0.0, INF)
    np.subtract(hi, lo, out=out, where=~same & np.isfinite(hi) & np.isfinite(lo))
    return out

