"""Closed convex targets, Euclidean projections and simplex utilities.

Every target exposes ``project(z) -> (pi, dist)`` with ``pi`` the Euclidean
projection of ``z`` and ``dist = ||z - pi||``.  Polyhedral and ball targets
also have a flat array encoding (:meth:`ConvexTarget.encode`) consumed by the
compiled episode kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ._jit import jit
from .errors import NumericalError

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 10_000

KIND_BOX = 0
KIND_BALL = 1
KIND_HALFSPACES = 2


# ---------------------------------------------------------------------------
# compiled kernels


@jit
def simplex_project_kernel(v):
    """Euclidean projection of ``v`` onto the probability simplex (sort based)."""
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = 0.0
    theta = 0.0
    for i in range(n):
        css += u[i]
        t = (css - 1.0) / (i + 1)
        if u[i] - t > 0.0:
            theta = t
    out = np.empty(n)
    for i in range(n):
        out[i] = max(v[i] - theta, 0.0)
    return out


@jit
def _polish_active_set(z, A, b, x, tol):
    # Re-solve the projection exactly on the constraints Dykstra left active.
    m = A.shape[0]
    d = A.shape[1]
    active = np.zeros(m, dtype=np.bool_)
    k = 0
    for j in range(m):
        if np.dot(A[j], x) - b[j] >= -1e-7 * (1.0 + abs(b[j])):
            active[j] = True
            k += 1
    if k == 0:
        return x, False
    As = np.empty((k, d))
    bs = np.empty(k)
    i = 0
    for j in range(m):
        if active[j]:
            As[i] = A[j]
            bs[i] = b[j]
            i += 1
    gram = As @ As.T
    rhs = As @ z - bs
    lam = np.linalg.lstsq(gram, rhs)[0]
    for i in range(k):
        if lam[i] < -1e-9:
            return x, False
    y = z - As.T @ lam
    for i in range(k):
        if lam[i] > 1e-12 and abs(np.dot(As[i], y) - bs[i]) > 1e-9 * (1.0 + abs(bs[i])):
            return x, False
    for j in range(m):
        if np.dot(A[j], y) - b[j] > tol:
            return x, False
    return y, True


@jit
def dykstra_kernel(z, A, b, tol, max_sweeps):
    """Project ``z`` onto ``{x : A x <= b}`` by Dykstra's alternating method.

    Returns ``(x, residual, converged)``.
    """
    m = A.shape[0]
    d = z.shape[0]
    feasible = True
    for j in range(m):
        if np.dot(A[j], z) > b[j]:
            feasible = False
            break
    if feasible:
        return z.copy(), 0.0, True
    norms = np.empty(m)
    for j in range(m):
        norms[j] = np.dot(A[j], A[j])
    x = z.copy()
    corr = np.zeros((m, d))
    residual = np.inf
    for sweep in range(max_sweeps):
        change = 0.0
        for j in range(m):
            y = x + corr[j]
            viol = np.dot(A[j], y) - b[j]
            if viol > 0.0 and norms[j] > 0.0:
                xn = y - (viol / norms[j]) * A[j]
            else:
                xn = y
            corr[j] = y - xn
            for i in range(d):
                dd = abs(xn[i] - x[i])
                if dd > change:
                    change = dd
            x = xn
        worst = 0.0
        for j in range(m):
            v = np.dot(A[j], x) - b[j]
            if v > worst:
                worst = v
        residual = max(change, worst)
        if residual <= tol:
            y, ok = _polish_active_set(z, A, b, x, tol)
            return y, residual, True
        if (sweep & (sweep + 1)) == 0 or sweep % 16 == 15:
            y, ok = _polish_active_set(z, A, b, x, tol)
            if ok:
                # KKT conditions hold exactly on the guessed active set.
                return y, 0.0, True
    return x, residual, False


@jit
def dykstra_many_kernel(Z, A, b, tol, max_sweeps):
    """Row-wise :func:`dykstra_kernel`; returns ``(P, worst_residual, all_converged)``."""
    P = np.empty_like(Z)
    worst = 0.0
    ok = True
    for i in range(Z.shape[0]):
        x, res, conv = dykstra_kernel(Z[i], A, b, tol, max_sweeps)
        P[i] = x
        if res > worst:
            worst = res
        ok = ok and conv
    return P, worst, ok


@jit
def project_encoded(kind, lo, hi, center, radius, A, b, z):
    """Projection for the flat target encoding used inside episode kernels."""
    if kind == 0:
        pi = np.minimum(np.maximum(z, lo), hi)
    elif kind == 1:
        diff = z - center
        nrm = math.sqrt(np.dot(diff, diff))
        if nrm <= radius:
            pi = z.copy()
        else:
            pi = center + diff * (radius / nrm)
    else:
        pi, res, ok = dykstra_kernel(z, A, b, 1e-10, 10000)
        if not ok:
            # Kernels cannot raise with payload; a NaN makes the failure loud.
            pi[:] = np.nan
    return pi


# ---------------------------------------------------------------------------
# targets


class ConvexTarget:
    """Base class for closed convex targets in R^d."""

    dim: int

    def project(self, z) -> Tuple[np.ndarray, float]:
        raise NotImplementedError

    def distance(self, z) -> float:
        return self.project(z)[1]

    def contains(self, z, tol: float = 1e-9) -> bool:
        return self.distance(z) <= tol

    def encode(self):
        """Return ``(kind, lo, hi, center, radius, A, b)`` for compiled kernels."""
        raise TypeError(f"{type(self).__name__} has no kernel encoding")

    def halfspaces(self):
        """Return ``(A, b)`` with the target equal to ``{z : A z <= b}``."""
        raise TypeError(f"{type(self).__name__} is not polyhedral")

    def norm_bound(self) -> float:
        """Upper bound on ``sup_{z in target} ||z||`` (may be ``inf``)."""
        return math.inf


def _vec(z, dim=None) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("expected a 1-d vector")
    if dim is not None and z.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {z.shape[0]}")
    if not np.all(np.isfinite(z)):
        raise ValueError("vector has non-finite entries")
    return z


def _empty_encoding(d):
    return np.zeros(d), 0.0, np.zeros((1, d)), np.zeros(1)


@dataclass(frozen=True, eq=False)
class Box(ConvexTarget):
    """Axis-aligned box ``{lower <= z <= upper}``; infinite bounds allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper must be non-empty and of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError("box bounds must satisfy lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, z):
        z = _vec(z, self.dim)
        pi = np.clip(z, self.lower, self.upper)
        return pi, float(np.linalg.norm(z - pi))

    def project_many(self, Z):
        """Vectorised projection of the rows of ``Z``."""
        P = np.clip(Z, self.lower, self.upper)
        return P, np.linalg.norm(Z - P, axis=-1)

    def encode(self):
        c, r, A, b = _empty_encoding(self.dim)
        return KIND_BOX, self.lower.copy(), self.upper.copy(), c, r, A, b

    def halfspaces(self):
        rows, offs = [], []
        for k in range(self.dim):
            if np.isfinite(self.upper[k]):
                e = np.zeros(self.dim)
                e[k] = 1.0
                rows.append(e)
                offs.append(self.upper[k])
            if np.isfinite(self.lower[k]):
                e = np.zeros(self.dim)
                e[k] = -1.0
                rows.append(e)
                offs.append(-self.lower[k])
        return np.array(rows).reshape(-1, self.dim), np.array(offs)

    def norm_bound(self):
        m = np.maximum(np.abs(self.lower), np.abs(self.upper))
        return float(np.linalg.norm(m))


def Orthant(signs) -> Box:
    """Closed orthant: coordinate k is ``>= 0`` if ``signs[k] > 0``, ``<= 0`` if negative."""
    s = np.asarray(signs, dtype=float).ravel()
    if s.size == 0 or np.any(s == 0):
        raise ValueError("orthant signs must be nonzero")
    lo = np.where(s > 0, 0.0, -np.inf)
    hi = np.where(s > 0, np.inf, 0.0)
    return Box(lo, hi)


def negative_orthant(d: int) -> Box:
    return Orthant(-np.ones(d))


@dataclass(frozen=True, eq=False)
class Ball(ConvexTarget):
    """Closed Euclidean ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _vec(self.center)
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("ball radius must be positive and finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, z):
        z = _vec(z, self.dim)
        diff = z - self.center
        nrm = float(np.linalg.norm(diff))
        if nrm <= self.radius:
            return z.copy(), 0.0
        return self.center + diff * (self.radius / nrm), nrm - self.radius

    def project_many(self, Z):
        diff = Z - self.center
        nrm = np.linalg.norm(diff, axis=-1, keepdims=True)
        scale = np.where(nrm > self.radius, self.radius / np.maximum(nrm, 1e-300), 1.0)
        P = self.center + diff * scale
        return P, np.maximum(nrm[..., 0] - self.radius, 0.0)

    def encode(self):
        d = self.dim
        return (KIND_BALL, np.zeros(d), np.zeros(d), self.center.copy(),
                self.radius, np.zeros((1, d)), np.zeros(1))

    def norm_bound(self):
        return float(np.linalg.norm(self.center) + self.radius)


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection(ConvexTarget):
    """Polyhedron ``{z : normals @ z <= offsets}`` with a known interior or boundary witness."""

    normals: np.ndarray
    offsets: np.ndarray
    witness: np.ndarray
    tol: float = DYKSTRA_TOL
    max_sweeps: int = DYKSTRA_MAX_SWEEPS

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.asarray(self.offsets, dtype=float).ravel()
        w = _vec(self.witness)
        if A.shape[0] != b.shape[0] or A.shape[1] != w.shape[0]:
            raise ValueError("normals, offsets and witness have inconsistent shapes")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise ValueError("zero normal vector")
        if np.any(A @ w - b > 1e-9 * (1 + np.abs(b))):
            raise ValueError("witness point violates the constraints (empty target?)")
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "witness", w)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def project(self, z):
        z = _vec(z, self.dim)
        pi, res, ok = dykstra_kernel(z, self.normals, self.offsets, self.tol, self.max_sweeps)
        if not ok:
            raise NumericalError("Dykstra projection did not converge", res)
        return pi, float(np.linalg.norm(z - pi))

    def project_many(self, Z):
        """Projection of the rows of ``Z`` (closed form for a single halfspace)."""
        Z = np.asarray(Z, dtype=float)
        if self.normals.shape[0] == 1:
            a, b = self.normals[0], self.offsets[0]
            viol = np.maximum(Z @ a - b, 0.0)
            P = Z - np.outer(viol / (a @ a), a)
            return P, viol / np.linalg.norm(a)
        P, res, ok = dykstra_many_kernel(Z, self.normals, self.offsets, self.tol,
                                         self.max_sweeps)
        if not ok:
            raise NumericalError("Dykstra projection did not converge", res)
        return P, np.linalg.norm(Z - P, axis=-1)

    def encode(self):
        d = self.dim
        return (KIND_HALFSPACES, np.zeros(d), np.zeros(d), np.zeros(d), 0.0,
                self.normals.copy(), self.offsets.copy())

    def halfspaces(self):
        return self.normals.copy(), self.offsets.copy()


def _golden_min(f, lo, hi, tol=1e-13, max_iter=200):
    # Minimise a convex scalar function on [lo, hi].
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    cands = [(f(lo), lo), (f(hi), hi), (fc, c), (fd, d)]
    return min(cands)[1]


@dataclass(frozen=True, eq=False)
class ConeLift(ConvexTarget):
    """Ratio lift of a target.

    ``mode="scalar"``: points ``(z, w)`` in R^{d+1} with ``w`` in ``bounds`` and
    ``z / w`` in ``inner``.  ``mode="coordinatewise"``: points ``(z, w)`` in
    R^{2d} with ``z_k / w_k`` in the k-th factor of a box ``inner``; this is the
    closure of the corresponding cone, so ``w_k = 0`` forces ``z_k`` into the
    recession cone of the factor.
    """

    inner: ConvexTarget
    mode: str = "scalar"
    bounds: Tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        if self.mode not in ("scalar", "coordinatewise"):
            raise ValueError("mode must be 'scalar' or 'coordinatewise'")
        lo, hi = self.bounds
        if not (0.0 <= lo <= hi):
            raise ValueError("ratio bounds must satisfy 0 <= low <= high")
        if self.mode == "coordinatewise" and not isinstance(self.inner, Box):
            raise ValueError("coordinatewise lift needs a box (product) inner target")

    @property
    def dim(self) -> int:
        d = self.inner.dim
        return d + 1 if self.mode == "scalar" else 2 * d

    def _bracket(self, w0, f):
        lo, hi = self.bounds
        start = min(max(w0, lo), hi if math.isfinite(hi) else max(w0, lo))
        top = start + math.sqrt(f(start)) + 1.0
        return lo, min(hi, top)

    def project(self, z):
        z = _vec(z, self.dim)
        d = self.inner.dim
        if self.mode == "scalar":
            x, w0 = z[:d], z[d]
            lo_pos = max(self.bounds[0], 1e-12)

            def f(w):
                w = max(w, lo_pos)
                pi, dist = self.inner.project(x / w)
                return (w * dist) ** 2 + (w - w0) ** 2

            a, b = self._bracket(w0, f)
            a = max(a, lo_pos)
            w = _golden_min(f, a, max(a, b))
            pi_inner, _ = self.inner.project(x / w)
            out = np.concatenate([w * pi_inner, [w]])
            return out, float(np.linalg.norm(z - out))
        x, w0 = z[:d], z[d:]
        lower, upper = self.inner.lower, self.inner.upper
        out = np.empty(2 * d)
        for k in range(d):
            def seg(w, k=k):
                lo_k = w * lower[k] if np.isfinite(lower[k]) else -np.inf
                hi_k = w * upper[k] if np.isfinite(upper[k]) else np.inf
                return min(max(x[k], lo_k), hi_k)

            def f(w, k=k):
                return (x[k] - seg(w)) ** 2 + (w - w0[k]) ** 2

            a, b = self._bracket(w0[k], f)
            w = _golden_min(f, a, max(a, b))
            out[k] = seg(w)
            out[d + k] = w
        return out, float(np.linalg.norm(z - out))


# ---------------------------------------------------------------------------
# free functions


def project(target: ConvexTarget, z) -> Tuple[np.ndarray, float]:
    """Euclidean projection ``(pi, dist)`` of ``z`` onto ``target``."""
    return target.project(z)


def distance(target: ConvexTarget, z) -> float:
    return target.project(z)[1]


def distance_linf(target: Box, z) -> float:
    """Sup-norm distance to a box: the largest one-sided bound violation."""
    if not isinstance(target, Box):
        raise TypeError("sup-norm distance is defined here for boxes only")
    z = _vec(z, target.dim)
    over = np.maximum(z - target.upper, 0.0)
    under = np.maximum(target.lower - z, 0.0)
    return float(max(over.max(), under.max()))


def simplex_project(v) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex."""
    return simplex_project_kernel(_vec(v))


def as_mixed(x, size=None, tol=1e-9) -> np.ndarray:
    """Validate a mixed action and return it as a float array."""
    x = _vec(x, size)
    if np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ValueError("mixed action must be nonnegative and sum to 1")
    return x


@dataclass(frozen=True, eq=False)
class Grid:
    """Finite set of points with optional offsets ``nu`` (weighted calibration).

    Points live in the reduced simplex representation used by calibration:
    coordinates ``1..Omega-1`` of a distribution over ``Omega`` outcomes.
    ``lattice`` holds integer coordinates for regular grids (or ``None``).
    """

    points: np.ndarray
    nu: np.ndarray = None
    step: float = math.nan
    lattice: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.shape[0] == 0:
            raise ValueError("grid must have at least one point")
        nu = np.zeros(P.shape[0]) if self.nu is None else np.asarray(self.nu, dtype=float).ravel()
        if nu.shape[0] != P.shape[0]:
            raise ValueError("nu must have one entry per grid point")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "nu", nu)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def neighbors(self):
        """Pairs ``(l, k)`` of lattice points differing by one step in one coordinate."""
        if self.lattice is None:
            raise ValueError("grid carries no lattice structure")
        index = {tuple(p): i for i, p in enumerate(self.lattice)}
        out = []
        for i, p in enumerate(self.lattice):
            for k in range(len(p)):
                for s in (-1, 1):
                    q = list(p)
                    q[k] += s
                    j = index.get(tuple(q))
                    if j is not None:
                        out.append((i, j))
        return out


@jit
def cell_assign_kernel(points, nu, q):
    best = 0
    best_val = np.inf
    for l in range(points.shape[0]):
        diff = q - points[l]
        val = np.dot(diff, diff) - nu[l]
        if val < best_val:
            best_val = val
            best = l
    return best


def cell_assign(grid: Grid, q) -> int:
    """Index minimising ``||q - p[l]||^2 - nu[l]``; ties go to the lowest index."""
    q = _vec(np.atleast_1d(q), grid.dim)
    return int(cell_assign_kernel(grid.points, grid.nu, q))
