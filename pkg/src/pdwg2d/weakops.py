"""Element-local discrete weak gradient and weak diffusion operators.

A weak function on a triangle is the triplet {v0, vb, vn}: an interior
polynomial, edge trace polynomials, and edge flux polynomials.  The weak
gradient maps (v0, vb) to a vector polynomial through moment identities
against vector test polynomials; the weak diffusion operator maps
(v0, vb, vn) to a scalar polynomial through moments against scalar test
polynomials.  Both are realized here as dense matrices acting on stacked
local coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pdwg2d.coefficients import Coefficients, ScalarField
from pdwg2d.polyquad import (
    EdgeBasis,
    TriBasis,
    edge_physical_quadrature,
    mass_matrix,
    project,
    tri_physical_quadrature,
)

K_DEFAULT = 2


@dataclass
class WeakFunctionLayout:
    """Local dof layout of one element's weak functions.

    Coefficient vectors are stacked as ``[v0 | vb edge0..2 | vn edge0..2]``
    with ``v0`` in a degree-k triangle basis, ``vb`` in degree-k edge bases
    and ``vn`` in degree-(k-1) edge bases.  Edge ``l`` joins local vertices
    ``l`` and ``(l+1) % 3``; pass ``edge_order`` to override the endpoint
    order of individual edge bases (used for globally canonical bases).
    """

    verts: np.ndarray
    k: int = K_DEFAULT
    edge_order: tuple | None = None

    def __post_init__(self):
        self.verts = np.asarray(self.verts, dtype=float)
        p = self.verts
        edge_vecs = np.array([p[1] - p[0], p[2] - p[1], p[0] - p[2]])
        lengths = np.linalg.norm(edge_vecs, axis=1)
        self.area = 0.5 * float(
            edge_vecs[0, 0] * (-edge_vecs[2, 1]) - edge_vecs[0, 1] * (-edge_vecs[2, 0])
        )
        self.diameter = float(lengths.max())
        self.centroid = p.mean(axis=0)
        self.normals = np.column_stack([edge_vecs[:, 1], -edge_vecs[:, 0]]) / lengths[:, None]
        self.edge_lengths = lengths
        self.tri_basis = TriBasis(self.k, self.centroid, self.diameter)
        ends = self.edge_order or [(p[l], p[(l + 1) % 3]) for l in range(3)]
        self.vb_bases = [EdgeBasis(self.k, a, b) for a, b in ends]
        self.vn_bases = [EdgeBasis(self.k - 1, a, b) for a, b in ends]
        self.n0 = self.tri_basis.dim
        self.nb = sum(eb.dim for eb in self.vb_bases)
        self.nn = sum(eb.dim for eb in self.vn_bases)

    @property
    def ndofs(self) -> int:
        return self.n0 + self.nb + self.nn

    def vb_slice(self, l: int) -> slice:
        d = self.vb_bases[0].dim
        return slice(self.n0 + l * d, self.n0 + (l + 1) * d)

    def vn_slice(self, l: int) -> slice:
        d = self.vn_bases[0].dim
        return slice(self.n0 + self.nb + l * d, self.n0 + self.nb + (l + 1) * d)

    def interior_quadrature(self, degree: int = 6):
        return tri_physical_quadrature(self.verts, degree)

    def edge_quadratures(self, npoints: int = 5):
        """Per local edge: (points, weights) on the element boundary."""
        out = []
        for l in range(3):
            a = self.verts[l]
            b = self.verts[(l + 1) % 3]
            out.append(edge_physical_quadrature(a, b, npoints))
        return out


def weak_gradient(layout: WeakFunctionLayout, r: int | None = None) -> np.ndarray:
    """Matrix of the discrete weak gradient as a map from (v0, vb) dofs to
    coefficients of a vector polynomial of degree ``r`` (default k - 1).

    Rows are ordered x-component coefficients first, then y-component.
    Built from the defining moments: test against each vector polynomial
    with the interior term -(v0, div psi) and the boundary term
    <vb, psi . n>.
    """
    r = layout.k - 1 if r is None else r
    pbasis = TriBasis(r, layout.centroid, layout.diameter)
    pts, wts = layout.interior_quadrature()
    m = mass_matrix(pbasis, pts, wts)

    rhs = np.zeros((2 * pbasis.dim, layout.n0 + layout.nb))
    v0_vals = layout.tri_basis.eval(pts)  # (nq, n0)
    p_grad = pbasis.grad(pts)  # (nq, dim, 2)
    # -(v0, div psi): for psi = (phi_m, 0), div psi = d/dx phi_m, etc.
    for comp in range(2):
        block = -np.einsum("q,qm,qj->mj", wts, p_grad[:, :, comp], v0_vals)
        rhs[comp * pbasis.dim : (comp + 1) * pbasis.dim, : layout.n0] = block
    for l in range(3):
        epts, ewts = edge_physical_quadrature(layout.verts[l], layout.verts[(l + 1) % 3])
        pv = pbasis.eval(epts)
        bv = layout.vb_bases[l].eval(epts)
        n = layout.normals[l]
        for comp in range(2):
            block = n[comp] * np.einsum("q,qm,qj->mj", ewts, pv, bv)
            rhs[comp * pbasis.dim : (comp + 1) * pbasis.dim, layout.vb_slice(l)] += block

    out = np.zeros_like(rhs)
    for comp in range(2):
        rows = slice(comp * pbasis.dim, (comp + 1) * pbasis.dim)
        out[rows] = np.linalg.solve(m, rhs[rows])
    return out


def weak_gradient_ibp(layout: WeakFunctionLayout, r: int | None = None) -> np.ndarray:
    """Same operator assembled from the integration-by-parts form:
    (grad v0, psi) - <v0 - vb, psi . n>.  Used as an independent route."""
    r = layout.k - 1 if r is None else r
    pbasis = TriBasis(r, layout.centroid, layout.diameter)
    pts, wts = layout.interior_quadrature()
    m = mass_matrix(pbasis, pts, wts)

    rhs = np.zeros((2 * pbasis.dim, layout.n0 + layout.nb))
    v0_grad = layout.tri_basis.grad(pts)  # (nq, n0, 2)
    p_vals = pbasis.eval(pts)
    for comp in range(2):
        rhs[comp * pbasis.dim : (comp + 1) * pbasis.dim, : layout.n0] = np.einsum(
            "q,qm,qj->mj", wts, p_vals, v0_grad[:, :, comp]
        )
    for l in range(3):
        epts, ewts = edge_physical_quadrature(layout.verts[l], layout.verts[(l + 1) % 3])
        pv = pbasis.eval(epts)
        trace0 = layout.tri_basis.eval(epts)
        bv = layout.vb_bases[l].eval(epts)
        n = layout.normals[l]
        for comp in range(2):
            rows = slice(comp * pbasis.dim, (comp + 1) * pbasis.dim)
            rhs[rows, : layout.n0] -= n[comp] * np.einsum("q,qm,qj->mj", ewts, pv, trace0)
            rhs[rows, layout.vb_slice(l)] += n[comp] * np.einsum("q,qm,qj->mj", ewts, pv, bv)

    out = np.zeros_like(rhs)
    for comp in range(2):
        rows = slice(comp * pbasis.dim, (comp + 1) * pbasis.dim)
        out[rows] = np.linalg.solve(m, rhs[rows])
    return out


def weak_diffusion(layout: WeakFunctionLayout, s: int, coeffs: Coefficients) -> np.ndarray:
    """Matrix of the discrete weak second-order operator as a map from
    (v0, vb, vn) dofs to coefficients of a degree-``s`` polynomial.

    Defining moments against each test polynomial w:
    (v0, a:hess w + div_a . grad w) - <vb, a grad w . n> + <vn, w>.
    """
    pbasis = TriBasis(s, layout.centroid, layout.diameter)
    pts, wts = layout.interior_quadrature()
    m = mass_matrix(pbasis, pts, wts)

    rhs = np.zeros((pbasis.dim, layout.ndofs))
    v0_vals = layout.tri_basis.eval(pts)
    lw = np.einsum("qij,qmij->qm", coeffs.a(pts), pbasis.hess(pts)) + np.einsum(
        "qi,qmi->qm", coeffs.div_a(pts), pbasis.grad(pts)
    )
    rhs[:, : layout.n0] = np.einsum("q,qm,qj->mj", wts, lw, v0_vals)
    for l in range(3):
        epts, ewts = edge_physical_quadrature(layout.verts[l], layout.verts[(l + 1) % 3])
        n = layout.normals[l]
        agradw_n = np.einsum("qij,qmj,i->qm", coeffs.a(epts), pbasis.grad(epts), n)
        bv = layout.vb_bases[l].eval(epts)
        nv = layout.vn_bases[l].eval(epts)
        pv = pbasis.eval(epts)
        rhs[:, layout.vb_slice(l)] -= np.einsum("q,qm,qj->mj", ewts, agradw_n, bv)
        rhs[:, layout.vn_slice(l)] += np.einsum("q,qm,qj->mj", ewts, pv, nv)
    return np.linalg.solve(m, rhs)


def weak_diffusion_ibp(layout: WeakFunctionLayout, s: int, coeffs: Coefficients) -> np.ndarray:
    """Integration-by-parts route, valid when v0 is smooth:
    (a:hess v0 + div_a . grad v0, w) + <v0 - vb, a grad w . n>
    - <a grad v0 . n - vn, w>."""
    pbasis = TriBasis(s, layout.centroid, layout.diameter)
    pts, wts = layout.interior_quadrature()
    m = mass_matrix(pbasis, pts, wts)

    rhs = np.zeros((pbasis.dim, layout.ndofs))
    lv0 = np.einsum("qij,qmij->qm", coeffs.a(pts), layout.tri_basis.hess(pts)) + np.einsum(
        "qi,qmi->qm", coeffs.div_a(pts), layout.tri_basis.grad(pts)
    )
    p_vals = pbasis.eval(pts)
    rhs[:, : layout.n0] = np.einsum("q,qm,qj->mj", wts, p_vals, lv0)
    for l in range(3):
        epts, ewts = edge_physical_quadrature(layout.verts[l], layout.verts[(l + 1) % 3])
        n = layout.normals[l]
        a_e = coeffs.a(epts)
        agradw_n = np.einsum("qij,qmj,i->qm", a_e, pbasis.grad(epts), n)
        agradv0_n = np.einsum("qij,qmj,i->qm", a_e, layout.tri_basis.grad(epts), n)
        trace0 = layout.tri_basis.eval(epts)
        bv = layout.vb_bases[l].eval(epts)
        nv = layout.vn_bases[l].eval(epts)
        pv = pbasis.eval(epts)
        rhs[:, : layout.n0] += np.einsum("q,qm,qj->mj", ewts, agradw_n, trace0)
        rhs[:, layout.vb_slice(l)] -= np.einsum("q,qm,qj->mj", ewts, agradw_n, bv)
        rhs[:, : layout.n0] -= np.einsum("q,qm,qj->mj", ewts, pv, agradv0_n)
        rhs[:, layout.vn_slice(l)] += np.einsum("q,qm,qj->mj", ewts, pv, nv)
    return np.linalg.solve(m, rhs)


def project_weak(layout: WeakFunctionLayout, field: ScalarField, coeffs: Coefficients) -> np.ndarray:
    """Element-local L2 projection of a smooth field into the weak space:
    interior projection of the value, edge projections of the trace, and
    edge projections of the conormal flux a grad(.) . n."""
    pts, wts = layout.interior_quadrature()
    dofs = np.zeros(layout.ndofs)
    dofs[: layout.n0] = project(field.value, layout.tri_basis, pts, wts)
    for l in range(3):
        epts, ewts = edge_physical_quadrature(layout.verts[l], layout.verts[(l + 1) % 3])
        n = layout.normals[l]
        dofs[layout.vb_slice(l)] = project(field.value, layout.vb_bases[l], epts, ewts)
        flux = np.einsum("qij,qj,i->q", coeffs.a(epts), field.grad(epts), n)
        dofs[layout.vn_slice(l)] = project(flux, layout.vn_bases[l], epts, ewts)
    return dofs


def verify_commutativity(
    verts, field: ScalarField, coeffs: Coefficients, s: int, k: int = K_DEFAULT
):
    """Residual norms of the projection/weak-operator commuting identities.

    Returns ``(res_grad, res_diff)``: the relative L2 mismatch on the
    element between (i) the weak gradient of the projected field and the
    vector L2 projection of the true gradient, and (ii) the weak diffusion
    of the projected field and the scalar projection of the true diffusion
    term.
    """
    layout = WeakFunctionLayout(verts, k=k)
    pts, wts = layout.interior_quadrature()
    dofs = project_weak(layout, field, coeffs)

    gop = weak_gradient(layout)
    gdim = gop.shape[0] // 2
    gbasis = TriBasis(k - 1, layout.centroid, layout.diameter)
    wg = gop @ dofs[: layout.n0 + layout.nb]
    pg = np.stack(
        [project(lambda p, c=c: field.grad(p)[..., c], gbasis, pts, wts) for c in range(2)]
    ).ravel()
    gvals = gbasis.eval(pts)
    diff = wg.reshape(2, gdim) - pg.reshape(2, gdim)
    num = np.sqrt(sum(np.sum(wts * (gvals @ diff[c]) ** 2) for c in range(2)))
    den = np.sqrt(sum(np.sum(wts * (gvals @ pg.reshape(2, gdim)[c]) ** 2) for c in range(2)))
    res_grad = num / max(den, 1e-300)

    dop = weak_diffusion(layout, s, coeffs)
    sbasis = TriBasis(s, layout.centroid, layout.diameter)
    wl = dop @ dofs
    pl = project(lambda p: coeffs.apply_diffusion(field, p), sbasis, pts, wts)
    svals = sbasis.eval(pts)
    num = np.sqrt(np.sum(wts * (svals @ (wl - pl)) ** 2))
    den = np.sqrt(np.sum(wts * (svals @ pl) ** 2))
    res_diff = num / max(den, 1e-300)
    return res_grad, res_diff
