import numpy as np
import pytest

from qmealy.generators import (
    basis_change_pair,
    block_machine,
    perturb_unitary,
    random_density,
    random_machine,
    random_unitary,
    rephase_blocks,
)
from qmealy.model import is_real, validate_density


@pytest.mark.parametrize("n", [1, 2, 5])
@pytest.mark.parametrize("real", [False, True])
def test_random_objects_valid(n, real, rng):
    u = random_unitary(n, rng, real)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-12)
    validate_density(random_density(n, rng, real=real))
    m = random_machine(n, rng, real=real)
    assert is_real(m) == real or n == 1


def test_rephase_keeps_diagonal_blocks(rng):
    rho = random_density(3, rng)
    out = rephase_blocks(rho, [2, 1], rng)
    np.testing.assert_allclose(out[:2, :2], rho[:2, :2])
    np.testing.assert_allclose(out[2, 2], rho[2, 2])
    assert not np.allclose(out, rho)
    validate_density(out)


def test_block_machine_structure(rng):
    m = block_machine([1, 2], rng)
    for op in list(m.unitaries) + list(m.measurements):
        assert np.all(op[0, 1:] == 0) and np.all(op[1:, 0] == 0)


def test_basis_change_pair(rng):
    m1, r1, m2, r2, w = basis_change_pair(3, rng)
    np.testing.assert_allclose(m2.unitaries[0], w @ m1.unitaries[0] @ w.conj().T)
    np.testing.assert_allclose(r2, w @ r1 @ w.conj().T)


def test_perturbation_angle(rng):
    m = random_machine(3, rng)
    p = perturb_unitary(m, 1, 0.1, rng)
    np.testing.assert_array_equal(p.unitaries[0], m.unitaries[0])
    rel = m.unitaries[1].conj().T @ p.unitaries[1]
    angles = np.abs(np.angle(np.linalg.eigvals(rel)))
    assert angles.max() == pytest.approx(0.1)
