"""Global assembly of the primal-dual saddle-point system.

The multiplier field pairs a continuous nodal P2 scalar (one dof per vertex
and per geometric edge) with per-element-edge P1 flux unknowns (two dofs per
element-edge incidence).  Because the trace component is definitionally the
trace of the P2 field, the trace-jump part of the stabilizer vanishes
identically and only the flux-mismatch and optional strong-residual terms
are assembled.  The primal variable is a discontinuous piecewise polynomial
of degree s (0 or 1).

Homogeneous constraints (P2 nodes on the closure of the Dirichlet boundary,
flux dofs on Neumann edges) are eliminated from the system rather than
penalized, keeping the zero block exact and the matrix symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from pdwg2d import _kernels
from pdwg2d.coefficients import Coefficients
from pdwg2d.mesh import BoundaryTag, Mesh, geometry_arrays
from pdwg2d.polyquad import edge_quadrature, tri_quadrature

TRI_QUAD_DEGREE = 6
EDGE_QUAD_POINTS = 5


def _ps_dim(s: int) -> int:
    return (s + 1) * (s + 2) // 2


class ElementTables:
    """Per-mesh evaluation tables shared by assembly and norm routines."""

    def __init__(self, mesh: Mesh, s: int):
        self.mesh = mesh
        self.s = s
        ga = geometry_arrays(mesh)
        self.geom = ga
        nt = mesh.num_triangles
        p = ga["verts"]

        ref_pts, ref_w = tri_quadrature(TRI_QUAD_DEGREE)
        self.nq = len(ref_w)
        lam = np.column_stack([1.0 - ref_pts[:, 0] - ref_pts[:, 1], ref_pts[:, 0], ref_pts[:, 1]])
        self.bary_q = lam
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (nt,2,2) columns
        self.x_q = p[:, None, 0, :] + np.einsum("nij,qj->nqi", jac, ref_pts)
        self.w_q = ref_w[None, :] * (2.0 * ga["area"][:, None])

        # P2 nodal basis: values are mesh-independent functions of the
        # barycentric coordinates; gradients/Hessians use the per-element
        # barycentric gradients.
        self.phi_q = self._p2_values(lam)  # (nq, 6)
        g = ga["bary_grads"]  # (nt, 3, 2)
        self.gradphi_q = self._p2_gradients(lam, g)  # (nt, nq, 6, 2)
        self.hessphi = self._p2_hessians(g)  # (nt, 6, 2, 2)

        # Primal basis: centroid-centered, diameter-scaled monomials.
        self.ps_dim = _ps_dim(s)
        self.ps_q = self._ps_values(self.x_q)  # (nt, nq, ds)
        self.ps_grad = np.zeros((nt, self.ps_dim, 2))
        if s >= 1:
            self.ps_grad[:, 1, 0] = 1.0 / ga["diam"]
            self.ps_grad[:, 2, 1] = 1.0 / ga["diam"]

        # Edge quadrature for every local edge (endpoint order v_l -> v_{l+1}).
        t_e, w_e = edge_quadrature(EDGE_QUAD_POINTS)
        self.nqe = len(t_e)
        a_pts = p  # (nt, 3, 2), local edge l from vertex l to (l+1) % 3
        b_pts = p[:, [1, 2, 0], :]
        self.x_e = a_pts[:, :, None, :] + t_e[None, None, :, None] * (
            b_pts - a_pts
        )[:, :, None, :]  # (nt, 3, nqe, 2)
        self.w_e = w_e[None, None, :] * ga["edge_len"][:, :, None]  # (nt, 3, nqe)

        # Trace of the P2 basis on local edges (fixed barycentric table).
        lam_e = np.zeros((3, self.nqe, 3))
        for l in range(3):
            lam_e[l, :, l] = 1.0 - t_e
            lam_e[l, :, (l + 1) % 3] = t_e
        self.phi_e = self._p2_values(lam_e)  # (3, nqe, 6)
        self.gradphi_e = self._p2_gradients(lam_e[None], g[:, None])  # (nt,3,nqe,6,2)

        # Flux basis {1, sigma} on the global edge in canonical orientation.
        # The flux unknown is single-valued per edge and represents the
        # normal flux with respect to the canonical edge normal; an element
        # whose outward normal opposes it sees the basis negated, so the two
        # incidences of an interior edge carry opposite flux values.
        ev = mesh.edges[mesh.tri_edges]  # (nt, 3, 2) canonical vertex pairs
        c0 = mesh.vertices[ev[:, :, 0]]
        c1 = mesh.vertices[ev[:, :, 1]]
        mid = 0.5 * (c0 + c1)
        length = np.linalg.norm(c1 - c0, axis=2)
        tang = (c1 - c0) / length[:, :, None]
        canon_n = np.stack([tang[:, :, 1], -tang[:, :, 0]], axis=2)
        sign = np.sign(np.einsum("nli,nli->nl", canon_n, ga["normals"]))
        self.flux_sign = sign
        sigma = np.einsum("nlqi,nli->nlq", self.x_e - mid[:, :, None, :], tang) / length[:, :, None]
        self.fluxb_e = sign[:, :, None, None] * np.stack(
            [np.ones_like(sigma), sigma], axis=3
        )  # (nt, 3, nqe, 2)

        self.ps_e = self._ps_values(self.x_e)  # (nt, 3, nqe, ds)

    # -- basis helpers -----------------------------------------------------

    @staticmethod
    def _p2_values(lam):
        """Nodal P2 values from barycentric coordinates ``lam (..., 3)``.

        Node order: vertices 0..2 then midpoints of local edges 0..2.
        """
        l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
        return np.stack(
            [
                l0 * (2 * l0 - 1),
                l1 * (2 * l1 - 1),
                l2 * (2 * l2 - 1),
                4 * l0 * l1,
                4 * l1 * l2,
                4 * l2 * l0,
            ],
            axis=-1,
        )

    @staticmethod
    def _p2_gradients(lam, g):
        """Gradients; ``lam (..., q, 3)`` broadcast against ``g (..., 3, 2)``."""
        lam = lam[..., None]  # (..., q, 3, 1)
        g = g[..., None, :, :]  # (..., 1, 3, 2)
        vert = (4 * lam - 1) * g  # (..., q, 3, 2)
        mids = [
            4 * (lam[..., a, :] * g[..., b, :] + lam[..., b, :] * g[..., a, :])
            for a, b in ((0, 1), (1, 2), (2, 0))
        ]
        return np.concatenate([vert, np.stack(mids, axis=-2)], axis=-2)

    @staticmethod
    def _p2_hessians(g):
        """Constant per-element Hessians ``(nt, 6, 2, 2)``."""
        outer = np.einsum("nli,nlj->nlij", g, g)
        vert = 4 * outer
        mids = np.stack(
            [
                4
                * (
                    np.einsum("ni,nj->nij", g[:, a], g[:, b])
                    + np.einsum("ni,nj->nij", g[:, b], g[:, a])
                )
                for a, b in ((0, 1), (1, 2), (2, 0))
            ],
            axis=1,
        )
        return np.concatenate([vert, mids], axis=1)

    def _ps_values(self, pts):
        """Primal monomial basis values at physical points ``(nt, ..., 2)``."""
        c = self.geom["centroid"]
        h = self.geom["diam"]
        extra = pts.ndim - 2
        cc = c.reshape((-1,) + (1,) * extra + (2,))
        hh = h.reshape((-1,) + (1,) * extra + (1,))
        q = (pts - cc) / hh
        cols = [np.ones(q.shape[:-1])]
        if self.s >= 1:
            cols += [q[..., 0], q[..., 1]]
        return np.stack(cols, axis=-1)


LAMBDA_LOCAL = 12  # 6 nodal P2 dofs + 3 edges x 2 flux dofs


@dataclass
class WeakDofMap:
    """Global indexing of the multiplier and primal unknowns.

    The multiplier block orders the continuous P2 nodes first (vertices,
    then geometric-edge midpoints) followed by two flux dofs per edge.
    The flux is single-valued per edge up to the normal orientation, which
    the consistency identity behind the method requires: interior-edge flux
    moments of a single-valued function must cancel between the two
    incidences.  ``free_lambda`` lists the unconstrained multiplier dofs;
    constrained dofs carry the homogeneous essential conditions of the
    multiplier space (trace dofs on the Dirichlet closure, flux dofs on
    Neumann edges).
    """

    mesh: Mesh
    s: int

    def __post_init__(self):
        mesh = self.mesh
        self.n_lambda0 = mesh.num_vertices + mesh.num_edges
        self.n_lambdan = 2 * mesh.num_edges
        self.n_lambda = self.n_lambda0 + self.n_lambdan
        self.n_u = _ps_dim(self.s) * mesh.num_triangles

        fixed = np.zeros(self.n_lambda, dtype=bool)
        for e in mesh.boundary_edges:
            tag = mesh.tags[e]
            if tag == BoundaryTag.DIRICHLET:
                fixed[mesh.edges[e, 0]] = True
                fixed[mesh.edges[e, 1]] = True
                fixed[mesh.num_vertices + e] = True
            elif tag == BoundaryTag.NEUMANN:
                base = self.n_lambda0 + 2 * e
                fixed[base : base + 2] = True
            else:
                raise ValueError(
                    "mesh has untagged boundary edges; call Mesh.with_tags first"
                )
        self.free_lambda = np.nonzero(~fixed)[0]
        self.full_to_free = np.full(self.n_lambda, -1, dtype=np.int64)
        self.full_to_free[self.free_lambda] = np.arange(len(self.free_lambda))
        self.n_free_lambda = len(self.free_lambda)
        self._tables = None

    @property
    def tables(self) -> ElementTables:
        if self._tables is None:
            self._tables = ElementTables(self.mesh, self.s)
        return self._tables

    def local_lambda_dofs(self) -> np.ndarray:
        """Global multiplier dof index of every local dof, ``(nt, 12)``."""
        mesh = self.mesh
        nt = mesh.num_triangles
        out = np.empty((nt, LAMBDA_LOCAL), dtype=np.int64)
        out[:, 0:3] = mesh.triangles
        out[:, 3:6] = mesh.num_vertices + mesh.tri_edges
        out[:, 6:12:2] = self.n_lambda0 + 2 * mesh.tri_edges
        out[:, 7:12:2] = self.n_lambda0 + 2 * mesh.tri_edges + 1
        return out

    def expand_lambda(self, lam_free: np.ndarray) -> np.ndarray:
        """Insert zeros at constrained positions."""
        full = np.zeros(self.n_lambda)
        full[self.free_lambda] = lam_free
        return full


def _stabilizer_edge_values(tables: ElementTables, coeffs: Coefficients) -> np.ndarray:
    """Values of (a grad(phi) . n - flux basis) for every local multiplier
    dof at every boundary quadrature point, ``(nt, 3 * nqe, 12)``."""
    nt, nqe = tables.mesh.num_triangles, tables.nqe
    vals = np.zeros((nt, 3, nqe, LAMBDA_LOCAL))
    a_e = coeffs.a(tables.x_e)  # (nt, 3, nqe, 2, 2)
    n = tables.geom["normals"]  # (nt, 3, 2)
    vals[..., 0:6] = np.einsum("nlqij,nlqdj,nli->nlqd", a_e, tables.gradphi_e, n)
    for l in range(3):
        vals[:, l, :, 6 + 2 * l : 8 + 2 * l] = -tables.fluxb_e[:, l]
    return vals.reshape(nt, 3 * nqe, LAMBDA_LOCAL)


def _residual_values(tables: ElementTables, coeffs: Coefficients) -> np.ndarray:
    """Values of (L phi + b . grad phi) at interior quadrature points for the
    P2 dofs (flux dofs do not enter), ``(nt, nq, 12)``."""
    nt, nq = tables.mesh.num_triangles, tables.nq
    vals = np.zeros((nt, nq, LAMBDA_LOCAL))
    a_q = coeffs.a(tables.x_q)
    da_q = coeffs.div_a(tables.x_q)
    b_q = coeffs.b(tables.x_q)
    vals[..., 0:6] = (
        np.einsum("nqij,ndij->nqd", a_q, tables.hessphi)
        + np.einsum("nqi,nqdi->nqd", da_q + b_q, tables.gradphi_q)
    )
    return vals


def _scatter_symmetric(local: np.ndarray, dofs: np.ndarray, full_to_free, n) -> sp.csr_matrix:
    """Accumulate per-element dense blocks into a sparse matrix over the
    free dofs, dropping rows/columns of constrained dofs."""
    free = full_to_free[dofs]  # (nt, 12)
    nloc = local.shape[1]
    rows = np.repeat(free[:, :, None], nloc, axis=2)
    cols = np.repeat(free[:, None, :], nloc, axis=1)
    mask = (rows >= 0) & (cols >= 0)
    mat = sp.coo_matrix(
        (local[mask], (rows[mask], cols[mask])), shape=(n, n)
    )
    return mat.tocsr()


def assemble_S(
    mesh: Mesh, dofmap: WeakDofMap, coeffs: Coefficients, include_trace_term: bool = False
) -> sp.csr_matrix:
    """Stabilizer matrix over the free multiplier dofs.

    Assembles the h^-1-weighted flux-mismatch term and, when gamma > 0, the
    strong-residual term.  The h^-3 trace-jump term vanishes identically for
    the continuous multiplier (the trace dofs ARE the P2 dofs);
    ``include_trace_term`` assembles it anyway as a debug check.
    """
    tables = dofmap.tables
    nt = mesh.num_triangles
    v2 = _stabilizer_edge_values(tables, coeffs)
    w2 = (tables.w_e / tables.geom["diam"][:, None, None]).reshape(nt, -1)
    local = _kernels.weighted_gram(v2, w2)

    if coeffs.gamma > 0.0:
        v3 = _residual_values(tables, coeffs)
        local = local + coeffs.gamma * _kernels.weighted_gram(v3, tables.w_q)

    if include_trace_term:
        # Trace minus trace: identically zero for the continuous multiplier.
        v1 = np.zeros_like(v2)
        w1 = (tables.w_e / tables.geom["diam"][:, None, None] ** 3).reshape(nt, -1)
        local = local + _kernels.weighted_gram(v1, w1)

    return _scatter_symmetric(
        local, dofmap.local_lambda_dofs(), dofmap.full_to_free, dofmap.n_free_lambda
    )


def _coupling_local(tables: ElementTables, coeffs: Coefficients) -> np.ndarray:
    """Per-element coupling blocks ``(nt, ds, 12)``: the pairing of each
    primal basis function with the weak diffusion plus weak convection of
    each local multiplier basis function.

    The moment definition of the weak diffusion operator makes the mass
    solve cancel: (u_i, D w_d) equals the raw moment R[i, d] directly.  The
    weak gradient of the continuous multiplier is the exact P2 gradient.
    """
    mesh = tables.mesh
    nt, nqe, ds = mesh.num_triangles, tables.nqe, tables.ps_dim

    # Flux moments <w_n, p_i> on each local edge.
    flux_vals = np.zeros((nt, 3, nqe, LAMBDA_LOCAL))
    for l in range(3):
        flux_vals[:, l, :, 6 + 2 * l : 8 + 2 * l] = tables.fluxb_e[:, l]
    r = _kernels.weighted_pair(
        tables.ps_e.reshape(nt, 3 * nqe, ds),
        flux_vals.reshape(nt, 3 * nqe, LAMBDA_LOCAL),
        tables.w_e.reshape(nt, -1),
    )

    if tables.s >= 1:
        # (w_0, L p_i)_T with L p_i = div_a . grad p_i for affine p_i.
        lp = np.einsum("nqi,ndi->nqd", coeffs.div_a(tables.x_q), tables.ps_grad)
        r[:, :, 0:6] += _kernels.weighted_pair(
            lp, np.broadcast_to(tables.phi_q[None], (nt, tables.nq, 6)).copy(), tables.w_q
        )
        # -<w_0, a grad p_i . n> on the element boundary.
        agradp_n = np.einsum(
            "nlqij,ndj,nli->nlqd", coeffs.a(tables.x_e), tables.ps_grad, tables.geom["normals"]
        )
        phi_e = np.broadcast_to(tables.phi_e[None], (nt, 3, nqe, 6)).reshape(nt, 3 * nqe, 6)
        r[:, :, 0:6] -= _kernels.weighted_pair(
            agradp_n.reshape(nt, 3 * nqe, ds), phi_e.copy(), tables.w_e.reshape(nt, -1)
        )

    # Convection term (p_i, b . grad w_0)_T; the weak gradient of the
    # continuous P2 multiplier is its ordinary gradient.
    bgrad = np.zeros((nt, tables.nq, LAMBDA_LOCAL))
    bgrad[..., 0:6] = np.einsum("nqi,nqdi->nqd", coeffs.b(tables.x_q), tables.gradphi_q)
    conv = _kernels.weighted_pair(tables.ps_q, bgrad, tables.w_q)
    return r + conv


def assemble_B(mesh: Mesh, dofmap: WeakDofMap, coeffs: Coefficients, s: int | None = None) -> sp.csr_matrix:
    """Coupling matrix: rows are primal dofs, columns free multiplier dofs."""
    if s is not None and s != dofmap.s:
        raise ValueError("s does not match the dof map")
    tables = dofmap.tables
    nt, ds = mesh.num_triangles, tables.ps_dim
    local = _coupling_local(tables, coeffs)  # (nt, ds, 12)

    lam_free = dofmap.full_to_free[dofmap.local_lambda_dofs()]  # (nt, 12)
    rows = (ds * np.arange(nt)[:, None, None] + np.arange(ds)[None, :, None]).repeat(
        LAMBDA_LOCAL, axis=2
    )
    cols = np.repeat(lam_free[:, None, :], ds, axis=1)
    mask = cols >= 0
    return sp.coo_matrix(
        (local[mask], (rows[mask], cols[mask])), shape=(dofmap.n_u, dofmap.n_free_lambda)
    ).tocsr()


def assemble_rhs(mesh: Mesh, dofmap: WeakDofMap, case) -> np.ndarray:
    """Load vector over the free multiplier dofs:
    -(f, w_0) + <g2, w_b> on Neumann edges + <g1, w_n> on Dirichlet edges."""
    tables = dofmap.tables
    full = np.zeros(dofmap.n_lambda)
    fq = case.f(tables.x_q)  # (nt, nq)
    interior = -np.einsum("nq,nq,qd->nd", tables.w_q, fq, tables.phi_q)  # (nt, 6)
    dofs = dofmap.local_lambda_dofs()
    np.add.at(full, dofs[:, 0:6], interior)

    for e in mesh.boundary_edges:
        t0 = mesh.edge_elems[e, 0]
        l = int(np.nonzero(mesh.tri_edges[t0] == e)[0][0])
        pts = tables.x_e[t0, l]
        wts = tables.w_e[t0, l]
        if mesh.tags[e] == BoundaryTag.NEUMANN:
            g2 = case.g2(pts, tables.geom["normals"][t0, l])
            np.add.at(full, dofs[t0, 0:6], tables.phi_e[l].T @ (wts * g2))
        else:
            g1 = case.g1(pts)
            np.add.at(
                full,
                dofs[t0, 6 + 2 * l : 8 + 2 * l],
                tables.fluxb_e[t0, l].T @ (wts * g1),
            )
    return full[dofmap.free_lambda]


@dataclass
class SaddleSystem:
    """Sparse symmetric block system [[S, B^T], [B, 0]] with rhs [F; 0]."""

    K: sp.csc_matrix
    rhs: np.ndarray
    n_lambda: int
    n_u: int

    @property
    def shape(self):
        return self.K.shape


def build_system(S: sp.spmatrix, B: sp.spmatrix, F: np.ndarray) -> SaddleSystem:
    n_lambda = S.shape[0]
    n_u = B.shape[0]
    if S.shape[1] != n_lambda or B.shape[1] != n_lambda or len(F) != n_lambda:
        raise ValueError("inconsistent block dimensions")
    K = sp.bmat([[S, B.T], [B, None]], format="csc")
    rhs = np.concatenate([F, np.zeros(n_u)])
    return SaddleSystem(K=K, rhs=rhs, n_lambda=n_lambda, n_u=n_u)


def dump_system(system: SaddleSystem, stream) -> None:
    """Triplet text dump: header, 'row col value' records, then the rhs."""
    coo = system.K.tocoo()
    stream.write(f"matrix {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
    for r, c, v in zip(coo.row, coo.col, coo.data):
        stream.write(f"{r} {c} {float(v)!r}\n")
    stream.write(f"rhs {len(system.rhs)}\n")
    for i, v in enumerate(system.rhs):
        stream.write(f"{i} {float(v)!r}\n")


def project_piecewise(dofmap: WeakDofMap, f) -> np.ndarray:
    """Elementwise L2 projection of ``f`` onto the primal space."""
    tables = dofmap.tables
    m = _kernels.weighted_gram(tables.ps_q, tables.w_q)
    fv = f(tables.x_q)
    r = np.einsum("nq,nq,nqd->nd", tables.w_q, fv, tables.ps_q)
    return _kernels.batch_solve(m, r[..., None])[..., 0].ravel()


def verify_error_equation(
    mesh: Mesh,
    dofmap: WeakDofMap,
    case,
    coeffs: Coefficients,
    lam_free: np.ndarray,
    u_vec: np.ndarray,
) -> float:
    """Residual of the consistency identity satisfied by the errors of the
    discrete solution against the projected exact solution.

    For every free multiplier test dof w the discrete solution satisfies
    s(eps, w) + b(e, w) = ell(w), where e is the primal error against the
    elementwise L2 projection and ell collects the projection-defect terms.
    Returns max |s(eps,w) + b(e,w) - ell(w)| over w, relative to the largest
    term magnitude.
    """
    tables = dofmap.tables
    nt, ds = mesh.num_triangles, tables.ps_dim
    S = assemble_S(mesh, dofmap, coeffs)
    B = assemble_B(mesh, dofmap, coeffs)
    q_u = project_piecewise(dofmap, case.u.value)
    e_vec = u_vec - q_u

    # Projection defect of the exact solution at the quadrature points.
    qc = q_u.reshape(nt, ds)
    r_q = case.u.value(tables.x_q) - np.einsum("nqd,nd->nq", tables.ps_q, qc)
    r_e = case.u.value(tables.x_e) - np.einsum("nlqd,nd->nlq", tables.ps_e, qc)

    v3 = _residual_values(tables, coeffs)
    ell_local = np.einsum("nq,nq,nqd->nd", tables.w_q, r_q, v3)
    v2 = _stabilizer_edge_values(tables, coeffs).reshape(nt, 3, tables.nqe, LAMBDA_LOCAL)
    ell_local -= np.einsum("nlq,nlq,nlqd->nd", tables.w_e, r_e, v2)

    ell = np.zeros(dofmap.n_lambda)
    np.add.at(ell, dofmap.local_lambda_dofs(), ell_local)
    ell = ell[dofmap.free_lambda]

    t1 = S @ lam_free
    t2 = B.T @ e_vec
    res = t1 + t2 - ell
    scale = max(np.abs(t1).max(), np.abs(t2).max(), np.abs(ell).max(), 1e-300)
    return float(np.abs(res).max() / scale)
