"""Polytopes in facet form, homothets, containment and small-dimension oracles."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from . import lp
from .fleet import DerivedTcl

CONTAIN_TOL = 1e-7   # absolute slack on support-value overshoot (kW / kWh)
DEDUP_TOL = 1e-9     # vertex de-duplication distance
MAX_ORACLE_DIM = 3


class EmptyPolytopeError(ValueError):
    pass


class UnboundedPolytopeError(ValueError):
    pass


@dataclass(frozen=True)
class HPolytope:
    """``{u : f @ u <= h}``."""

    f: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.f, dtype=float))
        h = np.asarray(self.h, dtype=float).ravel()
        if f.shape[0] != h.shape[0]:
            raise ValueError(f"f has {f.shape[0]} rows but h has {h.shape[0]}")
        if f.shape[1] < 1:
            raise ValueError("polytope dimension must be >= 1")
        if np.any(np.all(f == 0, axis=1)):
            raise ValueError("all-zero facet row")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.f.shape[1]

    @property
    def n_facets(self) -> int:
        return self.f.shape[0]

    def contains_point(self, u, tol: float = CONTAIN_TOL) -> bool:
        return bool(np.all(self.f @ np.asarray(u, dtype=float) <= self.h + tol))

    def slack(self, u) -> np.ndarray:
        return self.h - self.f @ np.asarray(u, dtype=float)

    def intersect(self, other: "HPolytope") -> "HPolytope":
        return HPolytope(np.vstack([self.f, other.f]), np.concatenate([self.h, other.h]))

    def scaled(self, c: float) -> "HPolytope":
        return HPolytope(self.f, c * self.h)


def box_polytope(lower, upper) -> HPolytope:
    """``{u : -lower <= u <= upper}``."""
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    m = lower.size
    return HPolytope(np.vstack([np.eye(m), -np.eye(m)]), np.concatenate([upper, lower]))


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        up = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != up.shape:
            raise ValueError("box bound lengths differ")
        if np.any(-lo > up):
            raise EmptyPolytopeError("box is empty (-lower > upper)")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    def as_hpolytope(self) -> HPolytope:
        return box_polytope(self.lower, self.upper)


@dataclass(frozen=True)
class Homothet:
    beta: float
    t: np.ndarray

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"homothet scale must be > 0, got {self.beta}")
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float).ravel())


@dataclass(frozen=True)
class VPolytope:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.shape[0] == 0:
            raise ValueError("VPolytope needs at least one vertex")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


@dataclass(frozen=True)
class FlexPolytope:
    u_box: Box
    x_poly: HPolytope
    combined: HPolytope


def lambda_matrix(a: float, m: int) -> np.ndarray:
    """Inverse of the bidiagonal dynamics matrix: ``L[j, k] = a**(j-k)``, j >= k."""
    if m < 1:
        raise ValueError("m must be >= 1")
    j = np.arange(m)
    e = j[:, None] - j[None, :]
    return np.where(e >= 0, float(a) ** np.maximum(e, 0), 0.0)


def dynamics_matrix(a: float, m: int) -> np.ndarray:
    return np.eye(m) - a * np.eye(m, k=-1)


def battery_facets(a, delta, x0, lower_u, upper_u, lower_x, upper_x) -> HPolytope:
    """Facet form of ``{U : -lu <= U <= uu, -lx <= L B U + L C <= ux}``.

    Row order is (upper power, lower power, upper energy, lower energy).
    """
    lower_u = np.asarray(lower_u, dtype=float).ravel()
    m = lower_u.size
    lam = lambda_matrix(a, m)
    lb = delta * lam
    lc = lam[:, 0] * (a * x0)
    f = np.vstack([np.eye(m), -np.eye(m), lb, -lb])
    h = np.concatenate([
        np.asarray(upper_u, dtype=float).ravel(),
        lower_u,
        np.broadcast_to(upper_x, (m,)) - lc,
        np.broadcast_to(lower_x, (m,)) + lc,
    ])
    return HPolytope(f, h)


def flex_polytope(d: DerivedTcl, m: int | None = None) -> FlexPolytope:
    m = d.m if m is None else m
    if m < 1 or m > d.m:
        raise ValueError(f"horizon {m} outside 1..{d.m}")
    combined = battery_facets(d.a, d.delta, d.x0, d.u_minus[:m], d.u_plus[:m], d.x_minus, d.x_plus)
    return FlexPolytope(
        u_box=Box(d.u_minus[:m], d.u_plus[:m]),
        x_poly=HPolytope(combined.f[2 * m:], combined.h[2 * m:]),
        combined=combined,
    )


def apply_homothet(hm: Homothet, p: HPolytope) -> HPolytope:
    if hm.t.size != p.dim:
        raise ValueError(f"translation has length {hm.t.size}, polytope dimension {p.dim}")
    return HPolytope(p.f, hm.beta * p.h + p.f @ hm.t)


def minkowski_homothets(hms) -> Homothet:
    hms = list(hms)
    if not hms:
        raise ValueError("need at least one homothet")
    beta = 0.0
    t = np.zeros_like(hms[0].t)
    for hm in hms:
        if hm.t.size != t.size:
            raise ValueError("homothets of different dimension")
        beta += hm.beta
        t = t + hm.t
    return Homothet(beta, t)


def support(p: HPolytope, direction, method: str = "simplex") -> float:
    """``max{direction @ x : x in p}``; raises on empty or unbounded ``p``."""
    sol = lp.solve(lp.LpProblem(c=-np.asarray(direction, dtype=float), a_ub=p.f, b_ub=p.h,
                                bounds=(None, None)), method)
    if sol.status == lp.INFEASIBLE:
        raise EmptyPolytopeError("polytope is empty")
    if sol.status == lp.UNBOUNDED:
        raise UnboundedPolytopeError("polytope is unbounded in the requested direction")
    if not sol.ok:
        raise lp.LpError(sol, "support function")
    return -sol.objective


def is_empty(p: HPolytope) -> bool:
    sol = lp.solve(lp.LpProblem(c=np.zeros(p.dim), a_ub=p.f, b_ub=p.h, bounds=(None, None)))
    return sol.status == lp.INFEASIBLE


def contains(outer: HPolytope, inner: HPolytope, tol: float = CONTAIN_TOL) -> bool:
    """True iff every support value of ``inner`` along ``outer``'s facets fits."""
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch")
    for fj, hj in zip(outer.f, outer.h):
        try:
            if support(inner, fj) > hj + tol:
                return False
        except UnboundedPolytopeError:
            return False
    return True


def chebyshev_center(p: HPolytope) -> tuple[np.ndarray, float]:
    """Centre and radius of the largest inscribed ball."""
    norms = np.linalg.norm(p.f, axis=1)
    c = np.zeros(p.dim + 1)
    c[-1] = -1.0
    sol = lp.solve(lp.LpProblem(c=c, a_ub=np.column_stack([p.f, norms]), b_ub=p.h,
                                bounds=[(None, None)] * p.dim + [(0, None)]))
    if sol.status == lp.INFEASIBLE:
        raise EmptyPolytopeError("polytope is empty")
    if not sol.ok:
        raise lp.LpError(sol, "Chebyshev centre")
    return sol.x[:-1], float(sol.x[-1])


def _dedup(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in points[np.lexsort(points.T[::-1])]:
        if not any(np.max(np.abs(p - q)) <= tol * max(1.0, np.max(np.abs(q))) for q in kept):
            kept.append(p)
    return np.array(kept)


def vertices(p: HPolytope) -> VPolytope:
    """Brute-force vertex enumeration over all ``m``-subsets of facets (m <= 3)."""
    m = p.dim
    if m > MAX_ORACLE_DIM:
        raise ValueError(f"oracle limited to m <= {MAX_ORACLE_DIM}, got m={m}")
    scale = 1.0 + np.abs(p.h)
    pts = []
    for rows in itertools.combinations(range(p.n_facets), m):
        fs = p.f[list(rows)]
        if abs(np.linalg.det(fs)) < 1e-12 * max(1.0, np.abs(fs).max() ** m):
            continue
        x = np.linalg.solve(fs, p.h[list(rows)])
        if np.all(p.f @ x <= p.h + 1e-9 * scale):
            pts.append(x)
    if not pts:
        if is_empty(p):
            raise EmptyPolytopeError("polytope is empty")
        raise UnboundedPolytopeError("polytope has no vertices (unbounded)")
    for k in range(m):
        e = np.zeros(m)
        e[k] = 1.0
        for d in (e, -e):
            sol = lp.solve(lp.LpProblem(c=-d, a_ub=p.f, b_ub=p.h, bounds=(None, None)), "simplex")
            if sol.status == lp.UNBOUNDED:
                raise UnboundedPolytopeError("polytope is unbounded")
    return VPolytope(_dedup(np.array(pts)))


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """Extreme points of a finite point set, handling flat sets."""
    pts = _dedup(points)
    if pts.shape[0] <= 1:
        return pts
    m = pts.shape[1]
    centred = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    if rank == 0:
        return pts[:1]
    coords = centred @ vt[:rank].T
    if rank == 1:
        c = coords[:, 0]
        return _dedup(pts[[int(np.argmin(c)), int(np.argmax(c))]])
    hull = ConvexHull(coords)
    return _dedup(pts[np.sort(hull.vertices)])


def minkowski_brute(a: VPolytope, b: VPolytope) -> VPolytope:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if a.dim > MAX_ORACLE_DIM:
        raise ValueError(f"oracle limited to m <= {MAX_ORACLE_DIM}, got m={a.dim}")
    sums = (a.vertices[:, None, :] + b.vertices[None, :, :]).reshape(-1, a.dim)
    return VPolytope(_hull_vertices(sums))


def hull_facets(v: VPolytope) -> HPolytope:
    """Facet form of a full-dimensional V-polytope (m in 2..3, or m = 1)."""
    pts = v.vertices
    if v.dim == 1:
        return HPolytope(np.array([[1.0], [-1.0]]), np.array([pts.max(), -pts.min()]))
    hull = ConvexHull(pts)
    eq = hull.equations  # normal @ x + offset <= 0
    return HPolytope(eq[:, :-1], -eq[:, -1])


def same_vertex_set(a: VPolytope, b: VPolytope, tol: float = DEDUP_TOL) -> bool:
    va, vb = _dedup(a.vertices, tol), _dedup(b.vertices, tol)
    if va.shape != vb.shape:
        return False
    used = np.zeros(vb.shape[0], dtype=bool)
    for p in va:
        d = np.max(np.abs(vb - p), axis=1)
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > tol * max(1.0, np.max(np.abs(p))):
            return False
        used[j] = True
    return True


def vpoly_in_hpoly(v: VPolytope, p: HPolytope, tol: float = CONTAIN_TOL) -> bool:
    return all(p.contains_point(x, tol) for x in v.vertices)
