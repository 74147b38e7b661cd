"""Case catalog: manufactured data consistency and interpolation.

The analytic right-hand sides are cross-checked with a central
finite-difference oracle applied to the total flux F = -a grad u + b u:
the model equation says div F = f.
"""

import numpy as np
import pytest

from pdwg2d.cases import (
    ManufacturedCase,
    NoExactSolutionError,
    UnknownCaseError,
    catalog,
    get_case,
    interpolate_Ih,
)
from pdwg2d.coefficients import isotropic_constant
from pdwg2d.mesh import BoundaryTag, DomainId, coarse_mesh

from conftest import all_dirichlet, polynomial_field

EXPECTED_IDS = {
    "table1", "table2", "table3", "table4", "table5", "table6", "table7",
    "table9-s1", "table9-s0", "table10", "table11", "table12", "table13",
    "table13b", "table14a", "table14b", "table14c", "table14d",
    "table15a", "table15b", "fig1-s1", "fig1-s0",
    "fig2-a1e-1", "fig2-a1e-3", "fig2-a1e-6",
    "fig3-omega3-f0", "fig3-omega3-f1", "fig3-omega4-f0", "fig3-omega4-f1",
    "fig3-omega5-f0", "fig3-omega5-f1",
}

# interior sample boxes per domain (axis-aligned, away from the slit)
SAMPLE_BOX = {
    DomainId.OMEGA1: ((0.05, 0.95), (0.05, 0.95)),
    DomainId.OMEGA2: ((0.05, 0.95), (0.05, 0.95)),
    DomainId.OMEGA3: ((-0.95, -0.05), (-0.95, -0.05)),
    DomainId.OMEGA4: ((-0.95, -0.05), (-0.95, -0.05)),
    DomainId.OMEGA5: ((-0.95, -0.05), (-0.95, -0.05)),
}


def sample_points(case, n, rng):
    (x0, x1), (y0, y1) = SAMPLE_BOX[case.domain]
    return np.column_stack(
        [rng.uniform(x0, x1, size=n), rng.uniform(y0, y1, size=n)]
    )


def flux(case, pts):
    u, c = case.u, case.coeffs
    return -np.einsum("...ij,...j->...i", c.a(pts), u.grad(pts)) + c.b(
        pts
    ) * u.value(pts)[..., None]


def fd_divergence(fn, pts, step=1e-4):
    """Richardson-extrapolated central differences, O(step^4) truncation;
    needed for the sharp tanh fronts whose third derivatives are large."""

    def central(h):
        out = np.zeros(pts.shape[:-1])
        for comp, e in enumerate(np.eye(2)):
            out += (fn(pts + h * e)[..., comp] - fn(pts - h * e)[..., comp]) / (2 * h)
        return out

    return (4.0 * central(step / 2) - central(step)) / 3.0


def manufactured_cases():
    return [c for c in catalog() if not c.driven]


def test_catalog_ids_complete():
    assert {c.id for c in catalog()} == EXPECTED_IDS


def test_get_case_unknown_raises():
    with pytest.raises(UnknownCaseError):
        get_case("table99")


@pytest.mark.parametrize("case", manufactured_cases(), ids=lambda c: c.id)
def test_f_matches_flux_divergence(case):
    rng = np.random.default_rng(hash(case.id) % 2**32)
    pts = sample_points(case, 200, rng)
    f_fd = fd_divergence(lambda p: flux(case, p), pts)
    f = case.f(pts)
    scale = max(np.abs(f).max(), 1.0)
    assert np.abs(f - f_fd).max() < 1e-9 * scale


@pytest.mark.parametrize("case", manufactured_cases(), ids=lambda c: c.id)
def test_gradient_and_hessian_consistent(case):
    # hand-coded derivatives vs central differences of the value/gradient
    rng = np.random.default_rng(5)
    pts = sample_points(case, 50, rng)
    step = 1e-6
    for comp, e in enumerate(np.eye(2)):
        fd = (case.u.value(pts + step * e) - case.u.value(pts - step * e)) / (2 * step)
        assert np.allclose(case.u.grad(pts)[..., comp], fd, atol=1e-6)
        fd_g = (case.u.grad(pts + step * e) - case.u.grad(pts - step * e)) / (2 * step)
        assert np.allclose(case.u.hess(pts)[..., comp], fd_g, atol=1e-5)


@pytest.mark.parametrize("case", manufactured_cases(), ids=lambda c: c.id)
def test_boundary_data_consistent(case):
    rng = np.random.default_rng(13)
    pts = sample_points(case, 20, rng)
    assert np.allclose(case.g1(pts), case.u.value(pts), atol=1e-13)
    n = np.array([0.6, 0.8])
    expected = flux(case, pts) @ n
    assert np.allclose(case.g2(pts, n), expected, atol=1e-12 + 1e-12 * np.abs(expected).max())


@pytest.mark.parametrize("case", catalog(), ids=lambda c: c.id)
def test_bc_partition_covers_boundary(case):
    mesh = coarse_mesh(case.domain).with_tags(case.bc)
    tags = mesh.tags[mesh.boundary_edges]
    assert np.all((tags == BoundaryTag.DIRICHLET) | (tags == BoundaryTag.NEUMANN))


def test_driven_cases_have_data_but_no_exact_solution():
    case = get_case("fig1-s1")
    assert case.driven
    pts = np.array([[0.25, 0.5]])
    assert case.f(pts) == pytest.approx(1.0)
    mesh = coarse_mesh(case.domain).with_tags(case.bc)
    with pytest.raises(NoExactSolutionError):
        interpolate_Ih(case, mesh, 1)


def test_interpolant_exact_for_linear():
    field = polynomial_field([0.3, 1.5, -0.7, 0.0, 0.0, 0.0])
    case = ManufacturedCase(
        id="lin", domain=DomainId.OMEGA1, s=1,
        coeffs=isotropic_constant(1.0), bc=all_dirichlet, u=field,
    )
    mesh = coarse_mesh(DomainId.OMEGA1).with_tags(all_dirichlet)
    dofs = interpolate_Ih(case, mesh, 1)
    # evaluate the interpolant at random points of each element
    from pdwg2d.assembly import WeakDofMap

    t = WeakDofMap(mesh, 1).tables
    vals = np.einsum("nqd,nd->nq", t.ps_q, dofs.reshape(mesh.num_triangles, -1))
    assert np.allclose(vals, field.value(t.x_q), atol=1e-13)


def test_interpolant_constant_s0():
    field = polynomial_field([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    case = ManufacturedCase(
        id="const", domain=DomainId.OMEGA1, s=0,
        coeffs=isotropic_constant(1.0), bc=all_dirichlet, u=field,
    )
    mesh = coarse_mesh(DomainId.OMEGA1).with_tags(all_dirichlet)
    assert np.allclose(interpolate_Ih(case, mesh, 0), 1.0)


def test_interpolant_matches_vertex_values():
    # s=1 on a curved field: the interpolant agrees with u at the vertices
    field = polynomial_field([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])  # x^2
    case = ManufacturedCase(
        id="quad", domain=DomainId.OMEGA1, s=1,
        coeffs=isotropic_constant(1.0), bc=all_dirichlet, u=field,
    )
    mesh = coarse_mesh(DomainId.OMEGA1).with_tags(all_dirichlet)
    dofs = interpolate_Ih(case, mesh, 1).reshape(mesh.num_triangles, 3)
    from pdwg2d.mesh import geometry_arrays

    ga = geometry_arrays(mesh)
    q = (ga["verts"] - ga["centroid"][:, None, :]) / ga["diam"][:, None, None]
    vand = np.concatenate([np.ones_like(q[:, :, :1]), q], axis=2)
    vals = np.einsum("nvd,nd->nv", vand, dofs)
    assert np.allclose(vals, field.value(ga["verts"]), atol=1e-13)


def test_table7_variable_coefficients():
    c = get_case("table7").coeffs
    pts = np.array([[0.3, 0.7], [0.9, 0.1]])
    s = 1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2
    assert np.allclose(c.a(pts)[:, 0, 0], s)
    assert np.allclose(c.a(pts)[:, 0, 1], 0.0)
    assert np.allclose(c.div_a(pts), 2.0 * pts)
    assert np.allclose(c.b(pts), pts)
    assert np.allclose(c.div_b(pts), 2.0)
