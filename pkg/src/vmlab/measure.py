"""Extended reals, finite metric point sets, atomic measures and integration."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

INF = math.inf

# Point sets up to this size get every triple checked for the triangle inequality.
EXHAUSTIVE_TRIANGLE_LIMIT = 200
# Dense distance matrices are materialized up to this many points.
DENSE_LIMIT = 4096


class InputError(ValueError):
    """Malformed input: bad values, mismatched spaces, violated invariants."""


class UndefinedOperation(ArithmeticError):
    """An extended-real operation of the form (+inf) + (-inf)."""


# ---------------------------------------------------------------------------
# Extended reals: plain floats with +-inf, NaN rejected.


def ext_real(x) -> float:
    """Coerce to an extended real; NaN and non-numbers are input errors."""
    if isinstance(x, str):
        key = x.strip().lower()
        if key in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        if key in ("-inf", "-infinity"):
            return -INF
        if key.lstrip("+-").startswith(("inf", "nan")):
            raise InputError(f"not an extended real: {x!r}")
    try:
        v = float(x)
    except (TypeError, ValueError) as exc:
        raise InputError(f"not an extended real: {x!r}") from exc
    if math.isnan(v):
        raise InputError("NaN is not an extended real")
    return v


def ext_add(a: float, b: float) -> float:
    if (a == INF and b == -INF) or (a == -INF and b == INF):
        raise UndefinedOperation("(+inf) + (-inf)")
    return a + b


def ext_sub(a: float, b: float) -> float:
    return ext_add(a, -b)


def ext_mul(a: float, b: float) -> float:
    """Product with the measure-theoretic convention 0 * (+-inf) = 0."""
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def as_ext_array(values, shape: tuple[int, ...] | None = None, what: str = "values") -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise InputError(f"{what}: expected shape {shape}, got {arr.shape}")
    if np.isnan(arr).any():
        raise InputError(f"{what}: NaN entries are not extended reals")
    return arr


def ext_close(a: float, b: float, tol: float) -> bool:
    """|a - b| <= tol, with equal infinities counted as close."""
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


# ---------------------------------------------------------------------------
# Integrals


@dataclass(frozen=True)
class IntegralValue:
    """Either defined(value) or undefined (both part-integrals infinite)."""

    defined: bool
    value: float | None = None

    @staticmethod
    def undefined() -> "IntegralValue":
        return IntegralValue(False, None)

    def require(self, what: str = "integral") -> float:
        if not self.defined:
            raise UndefinedOperation(f"{what} is undefined")
        return self.value  # type: ignore[return-value]

    def __repr__(self) -> str:
        return f"defined({self.value!r})" if self.defined else "undefined"


def split_integrals(values: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrals of the positive and negative parts along the last axis.

    Atoms of weight 0 contribute 0 even where the integrand is infinite.
    """
    pos = np.maximum(values, 0.0)
    neg = np.maximum(-values, 0.0)
    live = weights > 0
    tp = np.zeros(np.broadcast_shapes(values.shape, weights.shape))
    tn = np.zeros_like(tp)
    np.multiply(weights, pos, out=tp, where=live)
    np.multiply(weights, neg, out=tn, where=live)
    return tp.sum(axis=-1), tn.sum(axis=-1)


def integrate_array(values: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized integral: returns (defined mask, values with NaN where undefined)."""
    ip, ineg = split_integrals(values, weights)
    defined = np.minimum(ip, ineg) < INF
    out = np.full(defined.shape, np.nan)
    np.subtract(ip, ineg, out=out, where=defined)
    return defined, out


def integrate(f, mu: "AtomicMeasure") -> IntegralValue:
    """Integral of f against an atomic measure.

    f may be an array of values aligned with mu.space.points, or a callable
    taking a point identifier. A callable is only evaluated at support points.
    """
    w = mu.weights
    if callable(f):
        vals = np.zeros(len(w))
        for i in np.flatnonzero(w > 0):
            try:
                vals[i] = ext_real(f(mu.space.points[i]))
            except InputError:
                raise
            except Exception as exc:
                raise InputError(f"evaluation failed at {mu.space.points[i]!r}: {exc}") from exc
    else:
        vals = as_ext_array(f, (len(w),), "integrand")
    ok, val = integrate_array(vals, w)
    if not bool(ok):
        return IntegralValue.undefined()
    return IntegralValue(True, float(val))


# ---------------------------------------------------------------------------
# Metric point sets

RowFn = Callable[[int], np.ndarray]


class MetricPointSet:
    """Finite metric space with ordered, opaque point identifiers.

    Distances are served row by row so large one-dimensional grids never
    materialize a dense matrix. Construction validates the metric axioms;
    the triangle inequality is checked on every triple for small sets.
    """

    def __init__(
        self,
        points: Sequence[Hashable],
        row: RowFn,
        *,
        kind: str = "custom",
        coords: np.ndarray | None = None,
        line: np.ndarray | None = None,
        label: str | None = None,
        validate: bool = True,
    ):
        self.points = tuple(points)
        if len(self.points) == 0:
            raise InputError("a metric point set needs at least one point")
        self._row = row
        self.kind = kind
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        # Sorted-line fast path: Euclidean distance on these 1-D coordinates.
        self._line = None if line is None else np.asarray(line, dtype=float)
        self._index: dict | None = None
        self._dense: np.ndarray | None = None
        self._nn: np.ndarray | None = None
        self._balls: dict = {}
        self.space_id = label or self._fingerprint()
        if validate:
            self._validate()

    # constructors -----------------------------------------------------

    @classmethod
    def euclidean(cls, coords, points: Sequence[Hashable] | None = None, label: str | None = None):
        c = as_ext_array(coords, what="coordinates")
        if not np.isfinite(c).all():
            raise InputError("coordinates must be finite")
        pts = tuple(float(x) for x in c) if points is None and c.ndim == 1 else points
        if pts is None:
            pts = tuple(tuple(float(x) for x in r) for r in c)
        if c.ndim == 1:
            return cls(pts, lambda i: np.abs(c - c[i]), kind="euclidean", coords=c, line=c, label=label)
        return cls(pts, lambda i: np.sqrt(((c - c[i]) ** 2).sum(axis=1)), kind="euclidean", coords=c, label=label)

    @classmethod
    def discrete(cls, points: Sequence[Hashable], coords=None, label: str | None = None):
        n = len(points)

        def row(i: int) -> np.ndarray:
            r = np.ones(n)
            r[i] = 0.0
            return r

        return cls(points, row, kind="discrete", coords=coords, label=label)

    @classmethod
    def from_matrix(cls, points: Sequence[Hashable], matrix, coords=None, kind: str = "custom", label: str | None = None):
        d = as_ext_array(matrix, (len(points), len(points)), "distance matrix")
        return cls(points, lambda i: d[i], kind=kind, coords=coords, label=label)

    @classmethod
    def from_function(cls, points: Sequence[Hashable], distance: Callable[[Hashable, Hashable], float], coords=None, label: str | None = None):
        pts = tuple(points)
        d = np.array([[distance(p, q) for q in pts] for p in pts], dtype=float)
        return cls.from_matrix(pts, d, coords=coords, label=label)

    # basic access -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.points)

    def index(self, point: Hashable) -> int:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.points)}
        try:
            return self._index[point]
        except KeyError:
            raise InputError(f"point {point!r} is not in the space") from None

    def row(self, i: int) -> np.ndarray:
        if self._dense is not None:
            return self._dense[i]
        return self._row(i)

    def distance(self, p: Hashable, q: Hashable) -> float:
        return float(self.row(self.index(p))[self.index(q)])

    def dense(self) -> np.ndarray:
        if self._dense is None:
            if len(self) > DENSE_LIMIT:
                raise InputError("point set too large for a dense distance matrix")
            self._dense = np.vstack([self._row(i) for i in range(len(self))])
        return self._dense

    # validation ---------------------------------------------------------

    def _fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.kind.encode())
        h.update(repr(self.points).encode())
        if self.coords is not None:
            h.update(self.coords.tobytes())
        return f"{self.kind}-{len(self.points)}-{h.hexdigest()[:16]}"

    def _validate(self) -> None:
        n = len(self)
        if len(set(self.points)) != n:
            raise InputError("point identifiers must be distinct")
        if self._line is not None:
            xs = np.sort(self._line)
            if n > 1 and not (np.diff(xs) > 0).all():
                raise InputError("distance(p,q) = 0 for distinct points")
            return
        if n > DENSE_LIMIT:
            for i in range(n):
                r = self._row(i)
                if r.shape != (n,) or np.isnan(r).any() or (r < 0).any() or r[i] != 0:
                    raise InputError(f"invalid distance row at point {self.points[i]!r}")
                r2 = r.copy()
                r2[i] = 1.0
                if (r2 <= 0).any():
                    raise InputError("distance(p,q) = 0 for distinct points")
            return
        d = self.dense()
        if np.isnan(d).any() or not np.isfinite(d).all():
            raise InputError("distances must be finite")
        if (d < 0).any():
            raise InputError("distances must be nonnegative")
        if (np.diag(d) != 0).any():
            raise InputError("distance(p,p) must be 0")
        if not np.array_equal(d, d.T):
            raise InputError("distance must be symmetric")
        off = d + np.eye(n)
        if (off <= 0).any():
            raise InputError("distance(p,q) = 0 for distinct points")
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT:
            slack = 1e-12 * max(1.0, float(d.max()))
            for k in range(n):
                if (d > d[:, [k]] + d[[k], :] + slack).any():
                    raise InputError("triangle inequality violated")

    # neighbourhoods -----------------------------------------------------

    def nearest_distances(self) -> np.ndarray:
        """Distance from each point to its nearest other point (inf if alone)."""
        if self._nn is None:
            n = len(self)
            nn = np.full(n, INF)
            if n > 1:
                if self._line is not None:
                    order = np.argsort(self._line, kind="stable")
                    gaps = np.diff(self._line[order])
                    left = np.concatenate(([INF], gaps))
                    right = np.concatenate((gaps, [INF]))
                    nn[order] = np.minimum(left, right)
                else:
                    for i in range(n):
                        r = self.row(i).copy()
                        r[i] = INF
                        nn[i] = r.min()
            self._nn = nn
        return self._nn

    def finest_balls(self, radii: Sequence[float]) -> "BallSystem":
        """For each point, the smallest admissible open ball that is not a singleton.

        The admissible radius at s is the smallest schedule radius strictly
        above the nearest-neighbour distance of s; points whose neighbours all
        lie at or beyond the largest radius get the singleton ball.
        """
        key = tuple(float(r) for r in radii)
        if key not in self._balls:
            self._balls[key] = self._build_balls(np.asarray(key))
        return self._balls[key]

    def _build_balls(self, radii: np.ndarray) -> "BallSystem":
        n = len(self)
        nn = self.nearest_distances()
        asc = radii[::-1]
        pos = np.searchsorted(asc, nn, side="right")
        isolated = pos >= len(asc)
        delta = np.where(isolated, 0.0, asc[np.minimum(pos, len(asc) - 1)])
        members: list[np.ndarray] = []
        if self._line is not None:
            order = np.argsort(self._line, kind="stable")
            xs = self._line[order]
            for i in range(n):
                if isolated[i]:
                    members.append(np.array([i]))
                    continue
                x, dl = self._line[i], delta[i]
                lo = np.searchsorted(xs, x - 2 * dl, side="left")
                hi = np.searchsorted(xs, x + 2 * dl, side="right")
                cand = order[lo:hi]
                members.append(np.sort(cand[np.abs(self._line[cand] - x) < dl]))
        else:
            for i in range(n):
                if isolated[i]:
                    members.append(np.array([i]))
                else:
                    members.append(np.flatnonzero(self.row(i) < delta[i]))
        return BallSystem(members, np.where(isolated, INF, delta))


class BallSystem:
    """One ball per point stored in compressed form, with fast min/max reductions."""

    def __init__(self, members: list[np.ndarray], radius: np.ndarray):
        self.radius = radius
        sizes = np.array([len(m) for m in members])
        self.indptr = np.concatenate(([0], np.cumsum(sizes)))
        self.indices = np.concatenate(members).astype(np.intp) if members else np.zeros(0, np.intp)
        self.centers = np.repeat(np.arange(len(members)), sizes)
        # Punctured balls: members other than the center.
        keep = self.indices != self.centers
        self.p_indices = self.indices[keep]
        self.p_centers = self.centers[keep]
        p_sizes = np.bincount(self.p_centers, minlength=len(members))
        self.p_indptr = np.concatenate(([0], np.cumsum(p_sizes)))
        self.has_neighbours = p_sizes > 0

    def __len__(self) -> int:
        return len(self.indptr) - 1

    def members(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def ball_min(self, values: np.ndarray) -> np.ndarray:
        """min over each ball along the last axis; balls always contain their center."""
        return np.minimum.reduceat(values[..., self.indices], self.indptr[:-1], axis=-1)

    def ball_max(self, values: np.ndarray) -> np.ndarray:
        return np.maximum.reduceat(values[..., self.indices], self.indptr[:-1], axis=-1)

    def punctured_min(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(min over ball minus center, argmin point index); +inf and -1 where empty."""
        shape = values.shape[:-1] + (len(self),)
        out = np.full(shape, INF)
        arg = np.full(shape, -1, dtype=np.intp)
        if len(self.p_indices) == 0:
            return out, arg
        sub = values[..., self.p_indices]
        starts = self.p_indptr[:-1][self.has_neighbours]
        mins = np.minimum.reduceat(sub, starts, axis=-1)
        out[..., self.has_neighbours] = mins
        # Recover the first minimizing neighbour for witness reporting.
        seg = np.repeat(np.arange(len(starts)), np.diff(np.concatenate((starts, [len(self.p_indices)]))))
        hit = sub == mins[..., seg]
        pos = np.arange(len(self.p_indices))
        cand = np.where(hit, pos, len(self.p_indices))
        first = np.minimum.reduceat(cand, starts, axis=-1)
        arg[..., self.has_neighbours] = self.p_indices[np.minimum(first, len(self.p_indices) - 1)]
        return out, arg


# ---------------------------------------------------------------------------
# Atomic measures


class AtomicMeasure:
    """Finite nonnegative measure with one weight per point of its space."""

    def __init__(self, space: MetricPointSet, weights):
        w = as_ext_array(weights, (len(space),), "weights")
        if not np.isfinite(w).all():
            raise InputError("weights must be finite")
        if (w < 0).any():
            raise InputError("weights must be nonnegative")
        w.setflags(write=False)
        self.space = space
        self.weights = w

    @classmethod
    def from_mapping(cls, space: MetricPointSet, weights: Mapping[Hashable, float]) -> "AtomicMeasure":
        w = np.zeros(len(space))
        for p, x in weights.items():
            w[space.index(p)] = ext_real(x)
        return cls(space, w)

    @classmethod
    def dirac(cls, space: MetricPointSet, point: Hashable, mass: float = 1.0) -> "AtomicMeasure":
        return cls.from_mapping(space, {point: mass})

    def mass_of(self, subset: Iterable[Hashable]) -> float:
        idx = [self.space.index(p) for p in subset]
        return float(self.weights[idx].sum())

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def to_json(self) -> str:
        doc = {
            "space_id": self.space.space_id,
            "points": [_point_json(p) for p in self.space.points],
            "weights": [repr(float(x)) for x in self.weights],
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, space: MetricPointSet) -> "AtomicMeasure":
        doc = json.loads(text)
        if doc.get("space_id") != space.space_id:
            raise InputError("measure was serialized on a different space")
        pts = [_point_from_json(p) for p in doc["points"]]
        if pts != list(space.points):
            raise InputError("serialized points do not match the space")
        return cls(space, [ext_real(x) for x in doc["weights"]])

    def __repr__(self) -> str:
        return f"AtomicMeasure(space={self.space.space_id}, mass={total_mass(self)!r})"


def _point_json(p):
    return list(_point_json(x) for x in p) if isinstance(p, tuple) else p


def _point_from_json(p):
    return tuple(_point_from_json(x) for x in p) if isinstance(p, list) else p


def same_space(mu: AtomicMeasure, nu: AtomicMeasure) -> None:
    if mu.space is not nu.space and mu.space.space_id != nu.space.space_id:
        raise InputError("measures live on different spaces")


def total_variation_distance(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """sup over f with values in [-1, 1] of |int f dmu - int f dnu|, i.e. sum |w_mu - w_nu|."""
    same_space(mu, nu)
    return math.fsum(np.abs(mu.weights - nu.weights))


def total_mass(mu: AtomicMeasure) -> float:
    return math.fsum(mu.weights)
