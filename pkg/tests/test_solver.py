"""Direct solver: residual certification, determinism, failure modes."""

import numpy as np
import pytest
import scipy.sparse as sp

from pdwg2d.assembly import (
    SaddleSystem,
    WeakDofMap,
    assemble_B,
    assemble_S,
    assemble_rhs,
    build_system,
)
from pdwg2d.cases import get_case
from pdwg2d.mesh import coarse_mesh, refine_uniform
from pdwg2d.solver import SingularSystemError, solve


def table1_system(levels=2):
    case = get_case("table1")
    mesh = coarse_mesh(case.domain).with_tags(case.bc)
    for _ in range(levels):
        mesh = refine_uniform(mesh)
    dm = WeakDofMap(mesh, 1)
    S = assemble_S(mesh, dm, case.coeffs)
    B = assemble_B(mesh, dm, case.coeffs)
    F = assemble_rhs(mesh, dm, case)
    return build_system(S, B, F), dm


def test_diagonal_sanity():
    K = sp.csc_matrix(np.diag([2.0, 2.0]))
    system = SaddleSystem(K=K, rhs=np.array([2.0, 4.0]), n_lambda=1, n_u=1)
    rep = solve(system)
    assert np.allclose(rep.lam, [1.0])
    assert np.allclose(rep.u, [2.0])
    assert rep.residual <= 1e-14


def test_pdwg_system_residual():
    system, dm = table1_system(levels=3)
    rep = solve(system)
    assert rep.residual <= 1e-10
    assert len(rep.lam) == dm.n_free_lambda
    assert len(rep.u) == dm.n_u
    assert rep.seconds >= 0.0


def test_zero_data_gives_zero_solution():
    system, _ = table1_system(levels=2)
    system.rhs[:] = 0.0
    rep = solve(system)
    assert np.max(np.abs(rep.lam)) <= 1e-12
    assert np.max(np.abs(rep.u)) <= 1e-12


def test_solve_is_deterministic():
    system, _ = table1_system(levels=2)
    a = solve(system)
    b = solve(system)
    assert np.array_equal(a.lam, b.lam)
    assert np.array_equal(a.u, b.u)
    assert a.residual == b.residual


def test_singular_system_raises():
    K = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    system = SaddleSystem(K=K, rhs=np.array([1.0, 0.0]), n_lambda=1, n_u=1)
    with pytest.raises(SingularSystemError):
        solve(system)


def test_nearly_singular_residual_check():
    # factorization may "succeed" on a numerically singular matrix; the
    # residual certificate still rejects the result
    K = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-300]]))
    system = SaddleSystem(K=K, rhs=np.array([1.0, -1.0]), n_lambda=1, n_u=1)
    with pytest.raises(SingularSystemError):
        solve(system)
