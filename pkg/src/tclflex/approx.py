"""Maximum inner / minimum outer homothetic approximation of a polytope.

``mia`` and ``moa`` solve the Farkas-certificate linear programs directly:
the unknown nonnegative matrix ``G`` certifies that one facet system implies
the other.  ``mia_oracle`` and ``moa_oracle`` reach the same optimal scale by
a different route (support values along each facet normal, then a small LP
in ``(beta, t)`` only) and are used to cross-check the certificate programs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import lp
from .geometry import HPolytope, Homothet, UnboundedPolytopeError, support

logger = logging.getLogger(__name__)

POSITIVE_FLOOR = 1e-9   # strict positivity of s / beta modelled as >= this
CERT_TOL = 1e-7


class InscriptionError(ValueError):
    """The prototype cannot be inscribed in (or cannot cover) the target."""


@dataclass(frozen=True)
class FarkasCertificate:
    """Solution of a Farkas-certificate program.

    For an inner approximation ``g`` has shape (facets of target, facets of
    prototype) and ``s``/``r`` are the scaled variables with
    ``beta = 1/s`` and ``t = -r/s``.  For an outer approximation ``g`` has
    the transposed roles and ``s``/``r`` are ``None``.
    """

    kind: str
    g: np.ndarray
    beta: float
    t: np.ndarray
    s: float | None = None
    r: np.ndarray | None = None


def _kron_rows(n_rows: int, mat: np.ndarray, sparse: bool):
    """Matrix acting on row-major vec(G) so that result = vec(G @ mat)."""
    if sparse:
        return sp.kron(sp.identity(n_rows, format="csr"), sp.csr_matrix(mat.T), format="csr")
    return np.kron(np.eye(n_rows), mat.T)


def _farkas_program(f_src, h_src, f_dst, h_dst, sparse: bool):
    """Program certifying ``{f_src x <= h_src}`` inside a scaled/shifted ``{f_dst x <= h_dst}``.

    Variables are ``[scale, shift (m), vec(G)]`` with ``G >= 0`` of shape
    (rows of f_dst, rows of f_src).  For the inner program the scaled set is
    the target (``s P + r``); for the outer one it is the prototype.
    """
    n_dst, m = f_dst.shape
    n_src = f_src.shape[0]
    n_g = n_dst * n_src
    n_var = 1 + m + n_g
    # G f_src = f_dst
    a_g = _kron_rows(n_dst, f_src, sparse)
    # G h_src - scale * h_dst - f_dst @ shift <= 0
    a_h = _kron_rows(n_dst, h_src.reshape(-1, 1), sparse)
    left = np.column_stack([-h_dst, -f_dst])
    if sparse:
        a_eq = sp.hstack([sp.csr_matrix((n_dst * m, 1 + m)), a_g], format="csr")
        a_ub = sp.hstack([sp.csr_matrix(left), a_h], format="csr")
    else:
        a_eq = np.hstack([np.zeros((n_dst * m, 1 + m)), a_g])
        a_ub = np.hstack([left, a_h])
    c = np.zeros(n_var)
    c[0] = 1.0
    bounds = [(POSITIVE_FLOOR, None)] + [(None, None)] * m + [(0.0, None)] * n_g
    return lp.LpProblem(c=c, a_ub=a_ub, b_ub=np.zeros(n_dst), a_eq=a_eq,
                        b_eq=f_dst.reshape(-1), bounds=bounds)


def _solve_certificate(prob, n_dst, n_src, m, what, method):
    sol = lp.solve(prob, method)
    if sol.status in (lp.INFEASIBLE, lp.UNBOUNDED):
        raise InscriptionError(f"{what}: prototype cannot be inscribed ({sol.status})")
    if not sol.ok:
        raise lp.LpError(sol, what)
    scale = float(sol.x[0])
    if scale <= 10 * POSITIVE_FLOOR:
        logger.warning("%s: positivity floor active at optimum (scale=%g)", what, scale)
    shift = sol.x[1:1 + m].copy()
    g = np.maximum(sol.x[1 + m:], 0.0).reshape(n_dst, n_src)
    return scale, shift, g


def mia(p_i: HPolytope, p_o: HPolytope, method: str = "auto") -> tuple[Homothet, FarkasCertificate]:
    """Largest ``beta p_o + t`` contained in ``p_i``."""
    if p_i.dim != p_o.dim:
        raise ValueError("dimension mismatch")
    sparse = method != "simplex"
    prob = _farkas_program(p_o.f, p_o.h, p_i.f, p_i.h, sparse=sparse)
    s, r, g = _solve_certificate(prob, p_i.n_facets, p_o.n_facets, p_i.dim, "MIA", method)
    beta, t = 1.0 / s, -r / s
    cert = FarkasCertificate("inner", g, beta, t, s, r)
    return Homothet(beta, t), cert


def moa(p_i: HPolytope, p_o: HPolytope, method: str = "auto") -> tuple[Homothet, FarkasCertificate]:
    """Smallest ``beta p_o + t`` containing ``p_i``."""
    if p_i.dim != p_o.dim:
        raise ValueError("dimension mismatch")
    sparse = method != "simplex"
    prob = _farkas_program(p_i.f, p_i.h, p_o.f, p_o.h, sparse=sparse)
    beta, t, g = _solve_certificate(prob, p_o.n_facets, p_i.n_facets, p_i.dim, "MOA", method)
    return Homothet(beta, t), FarkasCertificate("outer", g, beta, t)


def certificate_residuals(cert: FarkasCertificate, p_i: HPolytope, p_o: HPolytope) -> dict:
    """Residuals of the certificate's defining (in)equalities.

    Returns ``min_g`` (most negative entry), ``eq`` (max |G F - F'|) and
    ``ineq`` (largest positive violation of the right-hand-side condition).
    """
    g = cert.g
    if cert.kind == "inner":
        eq = g @ p_o.f - p_i.f
        ineq = g @ p_o.h - (cert.s * p_i.h + p_i.f @ cert.r)
    else:
        eq = g @ p_i.f - p_o.f
        ineq = g @ p_i.h - (cert.beta * p_o.h + p_o.f @ cert.t)
    return {
        "min_g": float(g.min(initial=0.0)),
        "eq": float(np.abs(eq).max(initial=0.0)),
        "ineq": float(np.max(ineq, initial=0.0)),
    }


def _supports(p: HPolytope, directions: np.ndarray) -> np.ndarray:
    try:
        return np.array([support(p, d, method="simplex") for d in directions])
    except UnboundedPolytopeError as exc:
        raise InscriptionError(f"unbounded polytope: {exc}") from None


def mia_oracle(p_i: HPolytope, p_o: HPolytope) -> Homothet:
    """Inner approximation via support values of ``p_o`` along ``p_i``'s facets."""
    h_o = _supports(p_o, p_i.f)
    m = p_i.dim
    c = np.zeros(m + 1)
    c[0] = -1.0
    sol = lp.solve(lp.LpProblem(c=c, a_ub=np.column_stack([h_o, p_i.f]), b_ub=p_i.h,
                                bounds=[(POSITIVE_FLOOR, None)] + [(None, None)] * m), "simplex")
    if sol.status in (lp.INFEASIBLE, lp.UNBOUNDED):
        raise InscriptionError(f"MIA oracle: prototype cannot be inscribed ({sol.status})")
    if not sol.ok:
        raise lp.LpError(sol, "MIA oracle")
    return Homothet(float(sol.x[0]), sol.x[1:])


def moa_oracle(p_i: HPolytope, p_o: HPolytope) -> Homothet:
    """Outer approximation via support values of ``p_i`` along ``p_o``'s facets."""
    h_i = _supports(p_i, p_o.f)
    m = p_i.dim
    c = np.zeros(m + 1)
    c[0] = 1.0
    sol = lp.solve(lp.LpProblem(c=c, a_ub=np.column_stack([-p_o.h, -p_o.f]), b_ub=-h_i,
                                bounds=[(POSITIVE_FLOOR, None)] + [(None, None)] * m), "simplex")
    if sol.status in (lp.INFEASIBLE, lp.UNBOUNDED):
        raise InscriptionError(f"MOA oracle: no covering homothet ({sol.status})")
    if not sol.ok:
        raise lp.LpError(sol, "MOA oracle")
    return Homothet(float(sol.x[0]), sol.x[1:])
