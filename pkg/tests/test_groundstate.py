import numpy as np
import pytest
from scipy.linalg import expm

from qeom_thermal import io as qio
from qeom_thermal.eom import generate_excitation_basis
from qeom_thermal.errors import OddElectronCount, SizeMismatch
from qeom_thermal.groundstate import cached_vqe, hartree_fock_state, uccsd_state, vqe_minimize
from qeom_thermal.operators import PauliOperator, build_hamiltonian, jordan_wigner
from qeom_thermal.simulator import StateVector, exact_eigenstates, expectation


def _occupied(state):
    idx = int(np.flatnonzero(np.abs(state.amplitudes) > 0.5)[0])
    return {q for q in range(state.n_qubits) if idx >> q & 1}


def test_hartree_fock_states():
    assert _occupied(hartree_fock_state(2, 4)) == {0, 2}
    assert _occupied(hartree_fock_state(0, 4)) == set()
    assert _occupied(hartree_fock_state(4, 8)) == {0, 1, 4, 5}
    with pytest.raises(OddElectronCount):
        hartree_fock_state(3, 4)


def test_zero_params_is_reference():
    basis = generate_excitation_basis(1, 1)
    ref = hartree_fock_state(2, 4)
    assert np.array_equal(uccsd_state(np.zeros(3), basis, ref).amplitudes, ref.amplitudes)


def test_inverse_rotation():
    basis = generate_excitation_basis(2, 2)
    ref = hartree_fock_state(4, 8)
    params = np.zeros(len(basis))
    params[11] = 0.37
    fwd = uccsd_state(params, basis, ref)
    back = uccsd_state(-params, basis, fwd)
    assert np.allclose(back.amplitudes, ref.amplitudes, atol=1e-12)


def test_double_excitation_expm_oracle():
    basis = generate_excitation_basis(1, 1)
    ref = hartree_fock_state(2, 4)
    double = [k for k, e in enumerate(basis) if e.order == 2]
    assert double == [2]
    params = np.array([0.0, 0.0, np.pi / 2])
    e = basis[2].pauli.to_matrix()
    want = expm(np.pi / 2 * (e - e.conj().T)) @ ref.amplitudes
    assert np.allclose(uccsd_state(params, basis, ref).amplitudes, want, atol=1e-10)


def test_sequential_product_oracle():
    rng = np.random.default_rng(0)
    basis = generate_excitation_basis(1, 1)
    ref = hartree_fock_state(2, 4)
    params = rng.normal(size=3)
    want = ref.amplitudes
    for theta, exc in zip(params, basis):
        e = exc.pauli.to_matrix()
        want = expm(theta * (e - e.conj().T)) @ want
    got = uccsd_state(params, basis, ref)
    assert np.allclose(got.amplitudes, want, atol=1e-10)
    assert np.linalg.norm(got.amplitudes) == pytest.approx(1.0, abs=1e-12)


def test_size_mismatch():
    with pytest.raises(SizeMismatch):
        uccsd_state(np.zeros(2), generate_excitation_basis(1, 1), hartree_fock_state(2, 4))


def test_identity_hamiltonian():
    basis = generate_excitation_basis(1, 1)
    res = vqe_minimize(PauliOperator.identity(4), basis, hartree_fock_state(2, 4))
    assert res.energy == pytest.approx(1.0)
    assert np.allclose(res.params, 0.0)
    assert res.converged


def _fixture(data_dir, name):
    ints = qio.read_fcidump(data_dir / f"{name}.fcidump")
    n = 2 * ints.n_spatial_orbitals
    h = jordan_wigner(build_hamiltonian(ints), n)
    occ = ints.n_electrons // 2
    basis = generate_excitation_basis(occ, ints.n_spatial_orbitals - occ)
    return h, basis, hartree_fock_state(ints.n_electrons, n), exact_eigenstates(h, ints.n_electrons)


def test_h2_vqe_exact(data_dir, reference):
    h, basis, ref, exact = _fixture(data_dir, "h2_sto3g")
    res = vqe_minimize(h, basis, ref, seed=0)
    assert res.energy == pytest.approx(reference["h2_sto3g"]["ground_energy"], abs=1e-6)
    assert res.energy >= exact.energies[0] - 1e-9


def test_ethylene_variational_bound(data_dir):
    h, basis, ref, exact = _fixture(data_dir, "ethylene_cas22")
    res = vqe_minimize(h, basis, ref, seed=1)
    assert res.energy >= exact.energies[0] - 1e-9
    assert res.energy == pytest.approx(expectation(h, res.state).real)


def test_global_phase_invariance(data_dir):
    h, basis, ref, _ = _fixture(data_dir, "ethylene_cas22")
    params = np.array([0.1, -0.2, 0.3])
    a = uccsd_state(params, basis, ref)
    b = uccsd_state(params, basis, StateVector(np.exp(0.7j) * ref.amplitudes))
    assert expectation(h, a).real == pytest.approx(expectation(h, b).real, abs=1e-12)


def test_evaluation_cap_warns(data_dir):
    h, basis, ref, _ = _fixture(data_dir, "ethylene_cas22")
    with pytest.warns(RuntimeWarning):
        res = vqe_minimize(h, basis, ref, restarts=1, max_evaluations=10)
    assert not res.converged


def test_cache(tmp_path, data_dir):
    h, basis, ref, _ = _fixture(data_dir, "h2_sto3g")
    first = cached_vqe(h, basis, ref, seed=0, restarts=1, cache_dir=tmp_path)
    assert len(list(tmp_path.glob("vqe_*.json"))) == 1
    second = cached_vqe(h, basis, ref, seed=0, restarts=1, cache_dir=tmp_path)
    assert np.array_equal(first.params, second.params)
    assert np.allclose(first.state.amplitudes, second.state.amplitudes)
