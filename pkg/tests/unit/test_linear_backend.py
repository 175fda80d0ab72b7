import numpy as np
import pytest
import scipy.sparse as sp
from glmqs.linear_backend import (
    BandedBackend,
    DenseBackend,
    SparseBackend,
    linear_backend,
)
from glmqs.models.configs import BurgersConfig, GrayScottConfig
from glmqs.models.custom_error import FactorizationError
from glmqs.models.ode_system import JacobianStructure
from glmqs.problems import burgers_system, grayscott_system


def _dense_oracle(J, h_lambda, rhs):
    dense = J.toarray() if sp.issparse(J) else np.asarray(J)
    return np.linalg.solve(np.eye(dense.shape[0]) - h_lambda * dense, rhs)


@pytest.mark.unit
@pytest.mark.parametrize(
    "backend",
    [DenseBackend(4), BandedBackend(4, 1, 1), SparseBackend(4)],
    ids=["dense", "banded", "sparse"],
)
def test_identity_jacobian_halves(backend):
    backend.factor(np.eye(4), 0.5)
    b = np.array([1.0, -2.0, 3.0, 0.5])
    assert backend.solve(b) == pytest.approx(2.0 * b)


@pytest.mark.unit
def test_banded_burgers_matches_dense_oracle():
    system = burgers_system(BurgersConfig(M=11))
    assert system.dim == 9
    y = np.sin(np.linspace(0.1, 3.0, 9))
    J = system.jacobian(y)
    rhs = np.linspace(-1.0, 1.0, 9)
    backend = linear_backend(system.structure, system.dim)
    assert isinstance(backend, BandedBackend)
    backend.factor(J, 0.05)
    assert np.allclose(backend.solve(rhs), _dense_oracle(J, 0.05, rhs), rtol=0, atol=1e-12)


@pytest.mark.unit
def test_sparse_grayscott_matches_dense_oracle():
    system = grayscott_system(GrayScottConfig(M=8))
    assert system.dim == 2 * 8 * 8
    J = system.jacobian(system.y0)
    rhs = np.random.default_rng(0).normal(size=system.dim)
    backend = linear_backend(system.structure, system.dim)
    assert isinstance(backend, SparseBackend)
    backend.factor(J, 0.1)
    assert np.allclose(backend.solve(rhs), _dense_oracle(J, 0.1, rhs), rtol=0, atol=1e-10)


@pytest.mark.unit
def test_dense_backend_accepts_sparse_jacobian():
    J = sp.diags([1.0, 2.0, 3.0], format="csc")
    backend = DenseBackend(3)
    backend.factor(J, 0.1)
    assert backend.solve(np.ones(3)) == pytest.approx(1.0 / (1.0 - 0.1 * np.array([1, 2, 3])))


@pytest.mark.unit
def test_complex_jacobian():
    backend = DenseBackend(1)
    backend.factor(np.array([[1j]]), 1.0)
    assert backend.solve(np.array([1.0 + 0j]))[0] == pytest.approx(1.0 / (1.0 - 1j))


@pytest.mark.unit
@pytest.mark.parametrize(
    "backend",
    [DenseBackend(3), BandedBackend(3, 1, 1), SparseBackend(3)],
    ids=["dense", "banded", "sparse"],
)
def test_singular_iteration_matrix(backend):
    with pytest.raises(FactorizationError):
        backend.factor(np.eye(3), 1.0)


@pytest.mark.unit
@pytest.mark.parametrize(
    "backend",
    [DenseBackend(2), BandedBackend(2, 1, 1), SparseBackend(2)],
    ids=["dense", "banded", "sparse"],
)
def test_solve_before_factor(backend):
    with pytest.raises(FactorizationError, match="before factor"):
        backend.solve(np.ones(2))


@pytest.mark.unit
def test_banded_rejects_entries_outside_band():
    J = np.zeros((4, 4))
    J[0, 3] = 1.0
    with pytest.raises(FactorizationError, match="outside the declared band"):
        BandedBackend(4, 1, 1).factor(J, 0.1)


@pytest.mark.unit
def test_sparse_pattern_grows_when_jacobian_leaves_it():
    backend = SparseBackend(3, sp.identity(3, format="csc"))
    J = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [0.5, 0.0, 1.0]])
    backend.factor(J, 0.1)
    rhs = np.array([1.0, 2.0, 3.0])
    assert np.allclose(backend.solve(rhs), _dense_oracle(J, 0.1, rhs), atol=1e-14)


@pytest.mark.unit
def test_linear_backend_selects_by_structure():
    assert isinstance(linear_backend(JacobianStructure.dense(), 2), DenseBackend)
    assert isinstance(linear_backend(JacobianStructure.banded(1, 2), 5), BandedBackend)
    pattern = sp.identity(3, format="csc")
    assert isinstance(linear_backend(JacobianStructure.sparse(pattern), 3), SparseBackend)
