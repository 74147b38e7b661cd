"""Catalog of manufactured and driven test problems.

Every case fixes a domain, coefficients, element order s, and a boundary
partition.  Manufactured cases carry an exact solution with analytic
derivatives; the data f, g1, g2 are hand-derived closed forms matching

    -div(a grad u) + div(b u) = f   in Omega,
    u = g1                          on the Dirichlet part,
    (-a grad u + b u) . n = g2      on the Neumann part.

Driven cases specify f, g1, g2 directly and have no exact solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from pdwg2d.coefficients import Coefficients, ScalarField, isotropic_constant
from pdwg2d.mesh import BoundaryTag, DomainId, Mesh

D = BoundaryTag.DIRICHLET
N = BoundaryTag.NEUMANN


class UnknownCaseError(KeyError):
    """Raised for a case id not present in the catalog."""


class NoExactSolutionError(RuntimeError):
    """Raised when an exact-solution operation is applied to a driven case."""


@dataclass
class ManufacturedCase:
    id: str
    domain: DomainId
    s: int
    coeffs: Coefficients
    bc: Callable
    u: Optional[ScalarField] = None
    f: Callable = None
    g1: Callable = None
    g2: Callable = None
    description: str = ""

    @property
    def driven(self) -> bool:
        return self.u is None

    def __post_init__(self):
        if self.u is not None:
            uf, c = self.u, self.coeffs
            if self.f is None:
                self.f = lambda pts: (
                    -c.apply_diffusion(uf, pts)
                    + c.div_b(pts) * uf.value(pts)
                    + np.einsum("...i,...i->...", c.b(pts), uf.grad(pts))
                )
            if self.g1 is None:
                self.g1 = lambda pts: uf.value(pts)
            if self.g2 is None:
                self.g2 = lambda pts, n: np.einsum(
                    "...i,i->...",
                    -np.einsum("...ij,...j->...i", c.a(pts), uf.grad(pts))
                    + c.b(pts) * uf.value(pts)[..., None],
                    np.asarray(n, dtype=float),
                )


# -- exact solutions ---------------------------------------------------------

def _sin_cos() -> ScalarField:
    return ScalarField(
        value=lambda p: np.sin(p[..., 0]) * np.cos(p[..., 1]),
        grad=lambda p: np.stack(
            [np.cos(p[..., 0]) * np.cos(p[..., 1]), -np.sin(p[..., 0]) * np.sin(p[..., 1])],
            axis=-1,
        ),
        hess=lambda p: _sym_hess(
            -np.sin(p[..., 0]) * np.cos(p[..., 1]),
            -np.cos(p[..., 0]) * np.sin(p[..., 1]),
            -np.sin(p[..., 0]) * np.cos(p[..., 1]),
        ),
    )


def _sin_sin() -> ScalarField:
    return ScalarField(
        value=lambda p: np.sin(p[..., 0]) * np.sin(p[..., 1]),
        grad=lambda p: np.stack(
            [np.cos(p[..., 0]) * np.sin(p[..., 1]), np.sin(p[..., 0]) * np.cos(p[..., 1])],
            axis=-1,
        ),
        hess=lambda p: _sym_hess(
            -np.sin(p[..., 0]) * np.sin(p[..., 1]),
            np.cos(p[..., 0]) * np.cos(p[..., 1]),
            -np.sin(p[..., 0]) * np.sin(p[..., 1]),
        ),
    )


def _bubble() -> ScalarField:
    # u = x(1-x) y(1-y)
    p_ = lambda t: t * (1.0 - t)
    dp = lambda t: 1.0 - 2.0 * t
    return ScalarField(
        value=lambda p: p_(p[..., 0]) * p_(p[..., 1]),
        grad=lambda p: np.stack(
            [dp(p[..., 0]) * p_(p[..., 1]), p_(p[..., 0]) * dp(p[..., 1])], axis=-1
        ),
        hess=lambda p: _sym_hess(
            -2.0 * p_(p[..., 1]), dp(p[..., 0]) * dp(p[..., 1]), -2.0 * p_(p[..., 0])
        ),
    )


def _boundary_layer() -> ScalarField:
    # u = y(1-y) g(x) with g = 1 + e^-1 - e^-x - e^-(1-x).
    def g(x):
        return 1.0 + math.exp(-1.0) - np.exp(-x) - np.exp(-(1.0 - x))

    def dg(x):
        return np.exp(-x) - np.exp(-(1.0 - x))

    def d2g(x):
        return -np.exp(-x) - np.exp(-(1.0 - x))

    q = lambda y: y * (1.0 - y)
    dq = lambda y: 1.0 - 2.0 * y
    return ScalarField(
        value=lambda p: q(p[..., 1]) * g(p[..., 0]),
        grad=lambda p: np.stack(
            [q(p[..., 1]) * dg(p[..., 0]), dq(p[..., 1]) * g(p[..., 0])], axis=-1
        ),
        hess=lambda p: _sym_hess(
            q(p[..., 1]) * d2g(p[..., 0]),
            dq(p[..., 1]) * dg(p[..., 0]),
            -2.0 * g(p[..., 0]),
        ),
    )


def _tanh_front(width: float) -> ScalarField:
    # u = 0.5 (1 - tanh((x - 0.5) / width)), constant in y.
    def parts(p):
        t = np.tanh((p[..., 0] - 0.5) / width)
        return t, 1.0 - t * t

    def grad(p):
        _, sech2 = parts(p)
        return np.stack([-0.5 * sech2 / width, np.zeros_like(sech2)], axis=-1)

    def hess(p):
        t, sech2 = parts(p)
        return _sym_hess(t * sech2 / width**2, np.zeros_like(t), np.zeros_like(t))

    return ScalarField(
        value=lambda p: 0.5 * (1.0 - np.tanh((p[..., 0] - 0.5) / width)),
        grad=grad,
        hess=hess,
    )


def _gaussian() -> ScalarField:
    # u = exp(-(x-0.5)^2/0.2 - 3(y-0.5)^2/0.2)
    def val(p):
        x, y = p[..., 0] - 0.5, p[..., 1] - 0.5
        return np.exp(-x * x / 0.2 - 3.0 * y * y / 0.2)

    def grad(p):
        x, y = p[..., 0] - 0.5, p[..., 1] - 0.5
        u = val(p)
        return np.stack([-10.0 * x * u, -30.0 * y * u], axis=-1)

    def hess(p):
        x, y = p[..., 0] - 0.5, p[..., 1] - 0.5
        u = val(p)
        return _sym_hess(
            (100.0 * x * x - 10.0) * u, 300.0 * x * y * u, (900.0 * y * y - 30.0) * u
        )

    return ScalarField(value=val, grad=grad, hess=hess)


def _sym_hess(hxx, hxy, hyy):
    row0 = np.stack([hxx, hxy], axis=-1)
    row1 = np.stack([hxy, hyy], axis=-1)
    return np.stack([row0, row1], axis=-2)


def _variable_a_coeffs() -> Coefficients:
    # a = (1 + x^2 + y^2) I, b = (x, y); div_a = (2x, 2y), div_b = 2.
    def a(p):
        out = np.zeros(p.shape[:-1] + (2, 2))
        s = 1.0 + p[..., 0] ** 2 + p[..., 1] ** 2
        out[..., 0, 0] = s
        out[..., 1, 1] = s
        return out

    return Coefficients(
        a=a,
        div_a=lambda p: 2.0 * p,
        b=lambda p: p.copy(),
        div_b=lambda p: np.full(p.shape[:-1], 2.0),
        gamma=0.0,
    )


# -- boundary partitions -----------------------------------------------------

def _all_dirichlet(x, y):
    return D


def _neumann_bottom(x, y):
    # the boundary edge (0,1) x {0}
    return N if abs(y) < 1e-12 and x < 1.0 else D


def _neumann_left_at(x0: float):
    return lambda x, y: N if abs(x - x0) < 1e-12 else D


def _inflow_rotational(x, y, normal):
    # b = (y, -x); Neumann where b.n < 0, Dirichlet otherwise.
    return N if y * normal[0] - x * normal[1] < 0.0 else D


# -- catalog -----------------------------------------------------------------

def _constant(value: float):
    return lambda pts: np.full(np.asarray(pts).shape[:-1], value)


def _build_catalog() -> dict:
    cases = {}

    def add(case):
        cases[case.id] = case

    sincos, sinsin = _sin_cos(), _sin_sin()
    for cid, dom, bc in [
        ("table1", DomainId.OMEGA1, _all_dirichlet),
        ("table2", DomainId.OMEGA1, _neumann_bottom),
        ("table3", DomainId.OMEGA2, _all_dirichlet),
        ("table4", DomainId.OMEGA2, _neumann_bottom),
    ]:
        add(
            ManufacturedCase(
                id=cid,
                domain=dom,
                s=1,
                coeffs=isotropic_constant(1e-10, b=(1.0, 1.0)),
                bc=bc,
                u=sincos,
                description="u = sin(x) cos(y), a = 1e-10 I, b = (1,1)",
            )
        )

    for cid, dom, bc in [
        ("table5", DomainId.OMEGA1, _all_dirichlet),
        ("table6", DomainId.OMEGA2, _neumann_bottom),
    ]:
        add(
            ManufacturedCase(
                id=cid,
                domain=dom,
                s=0,
                coeffs=isotropic_constant(1e-3, b=(1.0, 1.0)),
                bc=bc,
                u=sinsin,
                description="u = sin(x) sin(y), a = 1e-3 I, b = (1,1)",
            )
        )

    add(
        ManufacturedCase(
            id="table7",
            domain=DomainId.OMEGA1,
            s=0,
            coeffs=_variable_a_coeffs(),
            bc=_all_dirichlet,
            u=sinsin,
            description="u = sin(x) sin(y), a = (1+x^2+y^2) I, b = (x,y)",
        )
    )

    for cid, s in [("table9-s1", 1), ("table9-s0", 0)]:
        add(
            ManufacturedCase(
                id=cid,
                domain=DomainId.OMEGA4,
                s=s,
                coeffs=isotropic_constant(1e-5, b=(1.0, 0.0)),
                bc=_neumann_left_at(-1.0),
                u=sinsin,
                description="cracked square, u = sin(x) sin(y), a = 1e-5 I, b = (1,0)",
            )
        )

    bubble = _bubble()
    for cid, s, bc in [
        ("table10", 1, _all_dirichlet),
        ("table11", 1, _neumann_left_at(0.0)),
        ("table12", 0, _all_dirichlet),
    ]:
        add(
            ManufacturedCase(
                id=cid,
                domain=DomainId.OMEGA1,
                s=s,
                coeffs=isotropic_constant(1e-5, b=(1.0, 1.0)),
                bc=bc,
                u=bubble,
                description="u = xy(1-x)(1-y), a = 1e-5 I, b = (1,1)",
            )
        )

    layer = _boundary_layer()
    add(
        ManufacturedCase(
            id="table13",
            domain=DomainId.OMEGA1,
            s=1,
            coeffs=isotropic_constant(1e-3, b=(1.0, 1.0)),
            bc=_neumann_left_at(0.0),
            u=layer,
            description="boundary-layer u, a = 1e-3 I, b = (1,1)",
        )
    )
    add(
        ManufacturedCase(
            id="table13b",
            domain=DomainId.OMEGA1,
            s=0,
            coeffs=isotropic_constant(1.0, b=(1.0, 1.0)),
            bc=_all_dirichlet,
            u=layer,
            description="boundary-layer u, a = I, b = (1,1)",
        )
    )

    for cid, s, width in [
        ("table14a", 0, 0.2),
        ("table14b", 0, 0.05),
        ("table14c", 1, 0.2),
        ("table14d", 1, 0.05),
    ]:
        add(
            ManufacturedCase(
                id=cid,
                domain=DomainId.OMEGA1,
                s=s,
                coeffs=isotropic_constant(1e-5, b=(1.0, 0.0)),
                bc=_all_dirichlet,
                u=_tanh_front(width),
                description=f"tanh front, width {width}, a = 1e-5 I, b = (1,0)",
            )
        )

    gauss = _gaussian()
    for cid, s, gamma in [("table15a", 0, 1.0), ("table15b", 1, 0.0)]:
        add(
            ManufacturedCase(
                id=cid,
                domain=DomainId.OMEGA1,
                s=s,
                coeffs=isotropic_constant(1e-5, b=(1.0, 0.0), gamma=gamma),
                bc=_all_dirichlet,
                u=gauss,
                description="Gaussian hump, a = 1e-5 I, b = (1,0)",
            )
        )

    # Driven problems for the qualitative solution plots.
    for cid, s in [("fig1-s1", 1), ("fig1-s0", 0)]:
        add(
            ManufacturedCase(
                id=cid,
                domain=DomainId.OMEGA1,
                s=s,
                coeffs=isotropic_constant(1e-5, b=(1.0, 0.0)),
                bc=_neumann_left_at(0.0),
                f=_constant(1.0),
                g1=lambda pts: pts[..., 0],
                g2=lambda pts, n: np.full(pts.shape[:-1], 1e-5),
                description="driven: f = 1, g2 = 1e-5 inflow, g1 = x",
            )
        )

    for tag, alpha in [("a1e-1", 1e-1), ("a1e-3", 1e-3), ("a1e-6", 1e-6)]:
        add(
            ManufacturedCase(
                id=f"fig2-{tag}",
                domain=DomainId.OMEGA1,
                s=0,
                coeffs=isotropic_constant(alpha, b=(1.0, 0.0)),
                bc=_neumann_left_at(0.0),
                f=_constant(1.0),
                g1=_constant(0.0),
                g2=(lambda a: lambda pts, n: np.full(pts.shape[:-1], a))(alpha),
                description=f"driven: f = 1, a = {alpha} I, g2 = a11 on inflow",
            )
        )

    for dom, dname in [
        (DomainId.OMEGA3, "omega3"),
        (DomainId.OMEGA4, "omega4"),
        (DomainId.OMEGA5, "omega5"),
    ]:
        for fval in (0.0, 1.0):
            rot = isotropic_constant(1e-4)
            rot.b = lambda pts: np.stack([pts[..., 1], -pts[..., 0]], axis=-1)
            add(
                ManufacturedCase(
                    id=f"fig3-{dname}-f{int(fval)}",
                    domain=dom,
                    s=1,
                    coeffs=rot,
                    bc=_inflow_rotational,
                    f=_constant(fval),
                    g1=lambda pts: np.sin(3.0 * pts[..., 0]),
                    g2=lambda pts, n: np.zeros(pts.shape[:-1]),
                    description="driven rotational flow, b = (y,-x), a = 1e-4 I",
                )
            )

    return cases


_CATALOG = None


def catalog() -> list:
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
    return list(_CATALOG.values())


def get_case(case_id: str) -> ManufacturedCase:
    catalog()
    try:
        return _CATALOG[case_id]
    except KeyError:
        raise UnknownCaseError(case_id) from None


def interpolate_Ih(case: ManufacturedCase, mesh: Mesh, s: int) -> np.ndarray:
    """Nodal interpolant of the exact solution in the primal space: vertex
    values for s = 1, centroid value for s = 0 (per element)."""
    if case.driven:
        raise NoExactSolutionError(case.id)
    from pdwg2d.mesh import geometry_arrays

    ga = geometry_arrays(mesh)
    if s == 0:
        return case.u.value(ga["centroid"])
    # Monomial coefficients from a per-element 3x3 Vandermonde at the vertices.
    q = (ga["verts"] - ga["centroid"][:, None, :]) / ga["diam"][:, None, None]
    vand = np.concatenate([np.ones_like(q[:, :, :1]), q], axis=2)  # (nt, 3, 3)
    vals = case.u.value(ga["verts"])  # (nt, 3)
    return np.linalg.solve(vand, vals[..., None])[..., 0].ravel()
