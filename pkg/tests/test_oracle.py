import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threelevel.effective import build_block, spectrum_grid, triplet_basis
from threelevel.errors import ConvergenceFailure, DimensionTooLarge, NoMatch
from threelevel.model import AtomKind, SystemParams, derive_params
from threelevel.oracle import (Eigenpairs, FockBasis, annihilation, build_effective_full,
                               build_full_hamiltonian, commutator_norm, eigendecompose,
                               exact_evolve, generator_matrix, initial_state, jacobi_eigh,
                               match_spectra)

from conftest import reference_params


@given(st.integers(0, 6), st.integers(0, 6), st.data())
def test_basis_round_trip(n1, n2, data):
    basis = FockBasis(n1, n2)
    idx = data.draw(st.integers(0, basis.dim - 1))
    assert basis.index(*basis.state(idx)) == idx
    assert basis.dim == 3 * (n1 + 1) * (n2 + 1)


def test_basis_rejects_outside_states():
    with pytest.raises(IndexError):
        FockBasis(2, 2).index(0, 3, 0)


def test_ladder_matrix_elements():
    a = annihilation(4)
    assert a[2, 3] == pytest.approx(np.sqrt(3))
    assert (a.T)[3, 2] == pytest.approx(np.sqrt(3))


def test_free_hamiltonian_is_diagonal(kind):
    p = reference_params(kind, n_max=3, g=(0.0, 0.0))
    h = build_full_hamiltonian(kind, p, include_crt=True)
    basis = h.basis
    expected = [p.energies[l] + n1 + n2 for l, n1, n2 in map(basis.state, range(basis.dim))]
    np.testing.assert_array_equal(h.entries, np.diag(expected))


def test_operators_are_exactly_hermitian(kind):
    p = reference_params(kind, n_max=5)
    d = derive_params(p, kind)
    for h in (build_full_hamiltonian(kind, p, False), build_full_hamiltonian(kind, p, True),
              build_effective_full(kind, p, d)):
        assert h.is_hermitian()


def test_excitation_conservation(kind):
    p = reference_params(kind, n_max=6)
    d = derive_params(p, kind)
    assert commutator_norm(kind, build_full_hamiltonian(kind, p, False)) == 0.0
    assert commutator_norm(kind, build_effective_full(kind, p, d)) == 0.0
    assert commutator_norm(kind, build_full_hamiltonian(kind, p, True)) > 0.0


def test_effective_reduces_to_rwa(kind):
    p = reference_params(kind, n_max=5)
    d = derive_params(p, kind, rwa=True)
    np.testing.assert_array_equal(build_effective_full(kind, p, d).entries,
                                  build_full_hamiltonian(kind, p, False).entries)


def test_effective_submatrices_equal_blocks(kind):
    p = reference_params(kind, n_max=8)
    d = derive_params(p, kind)
    h = build_effective_full(kind, p, d)
    for n1 in range(7):
        for n2 in range(7):
            states = triplet_basis(kind, n1, n2).states
            if not all(s is not None and h.basis.contains(*s) for s in states):
                continue
            idx = [h.basis.index(*s) for s in states]
            np.testing.assert_allclose(h.entries.real[np.ix_(idx, idx)],
                                       build_block(kind, p, d, n1, n2).m, rtol=0, atol=1e-12)


def test_dimension_limit():
    p = reference_params(AtomKind.LAMBDA, n_max=45)
    with pytest.raises(DimensionTooLarge):
        build_full_hamiltonian(AtomKind.LAMBDA, p, True)


def test_generator_is_anti_hermitian(kind):
    p = reference_params(kind, n_max=4)
    s = generator_matrix(kind, derive_params(p, kind), FockBasis(4, 4))
    np.testing.assert_array_equal(s, -s.T)


# eigensolver ---------------------------------------------------------------

def test_jacobi_diagonal_input():
    eig = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_array_equal(eig.values, [-1.0, 2.0, 3.0])
    np.testing.assert_array_equal(np.abs(eig.vectors), np.eye(3)[:, [1, 2, 0]])


def test_jacobi_pauli_x():
    m = np.zeros((4, 4))
    m[1, 2] = m[2, 1] = 1.0
    np.testing.assert_allclose(jacobi_eigh(m).values, [-1, 0, 0, 1], atol=1e-15)


def test_jacobi_random_hermitian_reconstruction():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
    h = a + a.conj().T
    eig = jacobi_eigh(h)
    scale = np.linalg.norm(h)
    assert np.all(np.diff(eig.values) >= 0)
    np.testing.assert_allclose(eig.vectors @ np.diag(eig.values) @ eig.vectors.conj().T, h, atol=1e-9 * scale)
    np.testing.assert_allclose(eig.vectors.conj().T @ eig.vectors, np.eye(50), atol=1e-9)
    resid = np.linalg.norm(h @ eig.vectors - eig.vectors * eig.values, axis=0)
    assert resid.max() <= 1e-9 * scale
    np.testing.assert_allclose(eig.values, np.linalg.eigvalsh(h), atol=1e-9 * scale)


def test_jacobi_sweep_budget():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(12, 12))
    with pytest.raises(ConvergenceFailure):
        jacobi_eigh(a + a.T, max_sweeps=1)


def test_lapack_and_jacobi_agree_on_hamiltonian():
    p = reference_params(AtomKind.VEE, n_max=3)
    h = build_full_hamiltonian(AtomKind.VEE, p, True)
    np.testing.assert_allclose(eigendecompose(h, "jacobi").values, eigendecompose(h, "lapack").values, atol=1e-12)


def test_frozen_low_spectrum():
    # lowest exact eigenvalues with counter-rotating terms, n_max = 10 (frozen)
    frozen = {
        AtomKind.LAMBDA: [-0.0007020457817112473, 0.07995452709644685, 0.9930019002936805],
        AtomKind.VEE: [-0.0007474581553793012, 0.9929795069192784, 0.9987104911485902],
        AtomKind.LADDER: [-0.0007020378541003082, 0.9930231494092943, 0.9992979428591555],
    }
    for kind, values in frozen.items():
        p = reference_params(kind, n_max=10)
        ev = eigendecompose(build_full_hamiltonian(kind, p, True)).values
        np.testing.assert_allclose(ev[:3], values, atol=1e-12)


def test_vacuum_bloch_siegert_shift():
    """Ground state |3,0,0> of the Lambda atom is pushed down by g^2 / (E1 - E3 + omega)."""
    p = reference_params(AtomKind.LAMBDA, n_max=10)
    ev = eigendecompose(build_full_hamiltonian(AtomKind.LAMBDA, p, True)).values
    assert ev[0] == pytest.approx(-0.04 ** 2 / 2.28, rel=2e-2)


# evolution ----------------------------------------------------------------

def test_identity_at_zero_time():
    p = reference_params(AtomKind.LAMBDA, n_max=4)
    basis = FockBasis(4, 4)
    psi0 = initial_state(basis, 1.0, 0.5)
    psi = exact_evolve(build_full_hamiltonian(AtomKind.LAMBDA, p, True), psi0, 0.0)
    np.testing.assert_allclose(psi, psi0, atol=1e-10)


def test_diagonal_hamiltonian_phases():
    h = np.diag([0.5, 1.5, -2.0]).astype(complex)
    psi0 = np.array([0.6, 0.0, 0.8], dtype=complex)
    psi = exact_evolve(h, psi0, 3.0)
    np.testing.assert_allclose(psi, psi0 * np.exp(-1j * np.diag(h).real * 3.0), atol=1e-14)


def test_unitarity(kind):
    p = reference_params(kind, n_max=6)
    basis = FockBasis(6, 6)
    eig = eigendecompose(build_full_hamiltonian(kind, p, True, basis))
    psi0 = initial_state(basis, p.alpha1, p.alpha2)
    for t in (1.0, 10.0, 100.0):
        assert abs(np.linalg.norm(exact_evolve(eig, psi0, t)) - 1) < 1e-9


def test_unnormalised_start_rejected():
    with pytest.raises(ValueError):
        exact_evolve(np.eye(2, dtype=complex), np.array([1.0, 1.0]), 1.0)


def test_initial_state_cut():
    basis = FockBasis(9, 9)
    psi = initial_state(basis, 1.0, 1.0, (8, 8)).reshape(basis.shape)
    assert np.all(psi[:, 9, :] == 0) and np.all(psi[1:] == 0)
    assert np.linalg.norm(psi) == pytest.approx(1.0)


# spectrum matching -----------------------------------------------------------

def test_rwa_match_is_exact(kind):
    p = reference_params(kind, n_max=8)
    d = derive_params(p, kind, rwa=True)
    basis = FockBasis(8, 8)
    eig = eigendecompose(build_full_hamiltonian(kind, p, False, basis))
    report = match_spectra(kind, spectrum_grid(kind, p, d), eig, d, basis)
    assert len(report.rows) > 0
    assert report.max_rel_gap < 1e-9


def test_match_report_fields():
    kind = AtomKind.LAMBDA
    p = reference_params(kind, n_max=10)
    d = derive_params(p, kind)
    basis = FockBasis(10, 10)
    report = match_spectra(kind, spectrum_grid(kind, p, d),
                           eigendecompose(build_full_hamiltonian(kind, p, True, basis)), d, basis, max_sum=4)
    assert all(r.n1 + r.n2 <= 4 for r in report.rows)
    r = report.rows[0]
    assert r.abs_gap == pytest.approx(abs(r.analytic - r.exact))
    assert r.rel_gap == pytest.approx(r.abs_gap / abs(r.exact))


def test_no_match_for_unrelated_spectrum():
    kind = AtomKind.LAMBDA
    p = reference_params(kind, n_max=5)
    d = derive_params(p, kind)
    basis = FockBasis(5, 5)
    # a random orthonormal basis shares no dominant support with any triplet
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(basis.dim, basis.dim)))
    fake = Eigenpairs(np.arange(basis.dim, dtype=float), q)
    with pytest.raises(NoMatch):
        match_spectra(kind, spectrum_grid(kind, p, d), fake, d, basis)
