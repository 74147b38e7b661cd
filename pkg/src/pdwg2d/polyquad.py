"""Polynomial bases, quadrature rules, mass matrices and L2 projections.

Triangle bases are centroid-centered, diameter-scaled monomials so that
mass-matrix conditioning does not degrade under refinement.  Edge bases are
scaled monomials in the arc-length parameter centered at the edge midpoint.

The triangle quadrature is a collapsed-coordinate (Duffy) tensor rule built
from Gauss-Legendre points: for requested polynomial exactness ``d`` the
integrand on the unit square has degree at most ``d + 1`` per direction, so
``n = ceil((d + 2) / 2)`` Gauss points per direction integrate it exactly.
Weights are positive by construction.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class DegenerateElementError(ValueError):
    """Raised when a mass matrix is numerically singular."""


@lru_cache(maxsize=None)
def tri_quadrature(degree: int = 6):
    """Quadrature on the reference triangle (0,0),(1,0),(0,1).

    Returns ``(points (nq,2), weights (nq,))`` with weights summing to 1/2
    and polynomial exactness of at least ``degree``.
    """
    n = (degree + 2 + 1) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wq = np.outer(w, w) * (1.0 - xi)
    pts = np.column_stack([xi.ravel(), (eta * (1.0 - xi)).ravel()])
    return pts, wq.ravel()


@lru_cache(maxsize=None)
def edge_quadrature(npoints: int = 5):
    """Gauss-Legendre rule on [0, 1]; exact to degree ``2 npoints - 1``."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w


def _tri_powers(degree: int) -> np.ndarray:
    return np.array([(i, j) for d in range(degree + 1) for i in range(d, -1, -1) for j in (d - i,)])


class TriBasis:
    """Scaled monomials ((x-xc)/h)^i ((y-yc)/h)^j, i + j <= degree."""

    def __init__(self, degree: int, center, scale: float):
        self.degree = degree
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.powers = _tri_powers(degree)
        self.dim = len(self.powers)

    def _local(self, pts):
        return (np.asarray(pts, dtype=float) - self.center) / self.scale

    def eval(self, pts) -> np.ndarray:
        """Values at ``pts (..., 2)`` -> ``(..., dim)``."""
        q = self._local(pts)
        i, j = self.powers[:, 0], self.powers[:, 1]
        return q[..., 0:1] ** i * q[..., 1:2] ** j

    def grad(self, pts) -> np.ndarray:
        """Gradients at ``pts`` -> ``(..., dim, 2)``."""
        q = self._local(pts)
        i, j = self.powers[:, 0], self.powers[:, 1]
        x, y = q[..., 0:1], q[..., 1:2]
        gx = np.where(i > 0, i * x ** np.maximum(i - 1, 0) * y**j, 0.0)
        gy = np.where(j > 0, j * x**i * y ** np.maximum(j - 1, 0), 0.0)
        return np.stack([gx, gy], axis=-1) / self.scale

    def hess(self, pts) -> np.ndarray:
        """Second derivatives at ``pts`` -> ``(..., dim, 2, 2)``."""
        q = self._local(pts)
        i, j = self.powers[:, 0], self.powers[:, 1]
        x, y = q[..., 0:1], q[..., 1:2]
        hxx = np.where(i > 1, i * (i - 1) * x ** np.maximum(i - 2, 0) * y**j, 0.0)
        hyy = np.where(j > 1, j * (j - 1) * x**i * y ** np.maximum(j - 2, 0), 0.0)
        hxy = np.where(
            (i > 0) & (j > 0),
            i * j * x ** np.maximum(i - 1, 0) * y ** np.maximum(j - 1, 0),
            0.0,
        )
        out = np.stack(
            [np.stack([hxx, hxy], axis=-1), np.stack([hxy, hyy], axis=-1)], axis=-2
        )
        return out / self.scale**2


class EdgeBasis:
    """Scaled monomials ((t - t_mid) / L)^p along a straight edge.

    The arc-length parameter runs from ``p0`` to ``p1``; the basis is a
    function of position only, so both elements sharing the edge see the
    same functions when constructed with the same endpoint order.
    """

    def __init__(self, degree: int, p0, p1):
        self.degree = degree
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.length = float(np.linalg.norm(self.p1 - self.p0))
        if self.length == 0.0:
            raise DegenerateElementError("zero-length edge")
        self.tangent = (self.p1 - self.p0) / self.length
        self.mid = 0.5 * (self.p0 + self.p1)
        self.dim = degree + 1

    def param(self, pts) -> np.ndarray:
        """Centered, scaled arc-length parameter of physical points."""
        return (np.asarray(pts, dtype=float) - self.mid) @ self.tangent / self.length

    def eval(self, pts) -> np.ndarray:
        s = self.param(pts)
        return s[..., None] ** np.arange(self.dim)

    def point_at(self, t) -> np.ndarray:
        """Physical point at normalized parameter ``t`` in [0, 1]."""
        t = np.asarray(t, dtype=float)
        return self.p0 + t[..., None] * (self.p1 - self.p0)


def tri_physical_quadrature(verts, degree: int = 6):
    """Map the reference rule to a physical triangle.

    Returns ``(points (nq,2), weights (nq,))`` with weights summing to the
    triangle area.
    """
    verts = np.asarray(verts, dtype=float)
    ref_pts, ref_w = tri_quadrature(degree)
    jac = np.stack([verts[1] - verts[0], verts[2] - verts[0]], axis=1)
    pts = verts[0] + ref_pts @ jac.T
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    return pts, ref_w * 2.0 * (0.5 * det)


def edge_physical_quadrature(p0, p1, npoints: int = 5):
    """Gauss points and weights on the segment ``p0 -> p1``."""
    t, w = edge_quadrature(npoints)
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    pts = p0 + t[:, None] * (p1 - p0)
    return pts, w * np.linalg.norm(p1 - p0)


def mass_matrix(basis, pts, wts) -> np.ndarray:
    """Gram matrix of ``basis`` under the quadrature ``(pts, wts)``."""
    v = basis.eval(pts)
    m = v.T @ (wts[:, None] * v)
    if not np.all(np.isfinite(m)) or np.linalg.cond(m) > 1e12:
        raise DegenerateElementError("ill-conditioned mass matrix")
    return m


def project(f, basis, pts, wts) -> np.ndarray:
    """L2-project ``f`` onto ``basis`` using the quadrature ``(pts, wts)``.

    ``f`` may be a callable on point arrays or an array of values at ``pts``.
    """
    v = basis.eval(pts)
    fv = f(pts) if callable(f) else np.asarray(f, dtype=float)
    m = mass_matrix(basis, pts, wts)
    return np.linalg.solve(m, v.T @ (wts * fv))
