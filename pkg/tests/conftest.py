"""Shared fixtures: small tagged meshes and constant-coefficient bundles."""

import numpy as np
import pytest

from pdwg2d.cases import ManufacturedCase
from pdwg2d.coefficients import ScalarField, isotropic_constant
from pdwg2d.mesh import BoundaryTag, DomainId, coarse_mesh, refine_uniform


def all_dirichlet(x, y):
    return BoundaryTag.DIRICHLET


@pytest.fixture
def omega1_level0():
    return coarse_mesh(DomainId.OMEGA1).with_tags(all_dirichlet)


@pytest.fixture
def omega1_level1(omega1_level0):
    return refine_uniform(omega1_level0)


@pytest.fixture
def omega1_level2(omega1_level1):
    return refine_uniform(omega1_level1)


def polynomial_field(cx) -> ScalarField:
    """Quadratic c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2 with analytic
    derivatives, for exactness tests."""
    c = np.asarray(cx, dtype=float)

    def value(p):
        x, y = p[..., 0], p[..., 1]
        return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y

    def grad(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack(
            [c[1] + 2 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2 * c[5] * y], axis=-1
        )

    def hess(p):
        shape = p.shape[:-1]
        h = np.empty(shape + (2, 2))
        h[..., 0, 0] = 2 * c[3]
        h[..., 0, 1] = c[4]
        h[..., 1, 0] = c[4]
        h[..., 1, 1] = 2 * c[5]
        return h

    return ScalarField(value=value, grad=grad, hess=hess)


def make_case(case_id, field, coeffs, bc=all_dirichlet, domain=DomainId.OMEGA1, s=1):
    return ManufacturedCase(
        id=case_id, domain=domain, s=s, coeffs=coeffs, bc=bc, u=field
    )


@pytest.fixture
def unit_coeffs():
    return isotropic_constant(1.0, b=(1.0, 1.0))
