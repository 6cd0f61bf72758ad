import numpy as np
import pytest

from ovfree import AMatrix, adjoint, flatten, psd_check, unflatten
from ovfree.algebra import matrix_units

from conftest import random_complex, random_unitary


def random_amatrix(rng, rows, cols, k):
    return AMatrix(random_complex(rng, (rows, cols, k, k)))


def test_adjoint_identity():
    m = AMatrix.identity(3, 2)
    assert adjoint(m).allclose(m)


def test_adjoint_matrix_unit():
    e12 = matrix_units(2)[0 * 2 + 1]
    m = AMatrix(e12.reshape(1, 1, 2, 2))
    e21 = matrix_units(2)[1 * 2 + 0]
    assert np.allclose(adjoint(m).block(0, 0), e21)


def test_adjoint_involution(rng):
    m = random_amatrix(rng, 3, 3, 2)
    assert adjoint(adjoint(m)).allclose(m)


def test_adjoint_antihomomorphism(rng):
    a = random_amatrix(rng, 3, 3, 2)
    b = random_amatrix(rng, 3, 3, 2)
    assert adjoint(a @ b).allclose(adjoint(b) @ adjoint(a))


def test_flatten_identity():
    m = AMatrix.identity(4, 3)
    assert np.allclose(flatten(m), np.eye(12))


def test_flatten_block_diagonal(rng):
    a = random_complex(rng, (2, 2))
    blocks = np.zeros((2, 2, 2, 2), dtype=complex)
    blocks[0, 0] = a
    blocks[1, 1] = a
    flat = flatten(AMatrix(blocks))
    expect = np.zeros((4, 4), dtype=complex)
    expect[:2, :2] = a
    expect[2:, 2:] = a
    assert np.allclose(flat, expect)


def test_flatten_multiplicative(rng):
    # oracle: multiply the flattened matrices directly
    a = random_amatrix(rng, 2, 2, 2)
    b = random_amatrix(rng, 2, 2, 2)
    direct = flatten(a) @ flatten(b)
    assert np.max(np.abs(flatten(a @ b) - direct)) < 1e-12


def test_flatten_star_preserving(rng):
    m = random_amatrix(rng, 3, 3, 2)
    assert np.max(np.abs(flatten(adjoint(m)) - flatten(m).conj().T)) < 1e-12


def test_flatten_rejects_non_square(rng):
    with pytest.raises(ValueError):
        flatten(random_amatrix(rng, 2, 3, 2))


def test_unflatten_round_trip(rng):
    m = random_amatrix(rng, 3, 3, 2)
    assert unflatten(flatten(m), 2).allclose(m)


def test_psd_identity():
    rep = psd_check(np.eye(4))
    assert abs(rep.min_eigenvalue - 1.0) < 1e-12
    assert rep.witness is None and rep.is_psd


def test_psd_indefinite_diagonal():
    rep = psd_check(np.diag([1.0, -1.0]))
    assert abs(rep.min_eigenvalue + 1.0) < 1e-12
    assert rep.witness is not None
    assert abs(abs(rep.witness[1]) - 1.0) < 1e-12
    assert not rep.is_psd


def test_psd_hankel_negative():
    # det by cofactor expansion: 1*(0.5*0 - 0) - 0 + 0.5*(0 - 0.25) = -1/8
    h = np.array([[1, 0, 0.5], [0, 0.5, 0], [0.5, 0, 0]])
    assert abs(np.linalg.det(h) + 0.125) < 1e-12
    rep = psd_check(h)
    assert rep.min_eigenvalue < -1e-6
    assert rep.witness is not None
    # witness invariant
    quad = rep.witness.conj() @ h @ rep.witness
    assert abs(quad.real - rep.min_eigenvalue) < 1e-10


def test_psd_rejects_non_hermitian(rng):
    m = random_complex(rng, (3, 3))
    with pytest.raises(ValueError):
        psd_check(m)


def test_psd_unitary_invariance(rng):
    h = random_complex(rng, (5, 5))
    h = h + h.conj().T
    u = random_unitary(rng, 5)
    r1 = psd_check(h)
    r2 = psd_check(u.conj().T @ h @ u)
    assert abs(r1.min_eigenvalue - r2.min_eigenvalue) < 1e-10


def test_psd_of_gram_amatrix(rng):
    m = random_amatrix(rng, 3, 3, 2)
    rep = psd_check(flatten(adjoint(m) @ m))
    assert rep.min_eigenvalue >= -1e-10
