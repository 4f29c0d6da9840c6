import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_pauli, random_state, seeds
from qeom_thermal.errors import EmptyRecord, NotInformationallyComplete, QubitCountMismatch
from qeom_thermal.operators import PauliOperator
from qeom_thermal.povm import (
    OutcomeRecord,
    PovmSpec,
    all_outcomes,
    canonical_sic,
    decompose_observable,
    estimate,
    estimate_pauli_strings,
    outcome_probabilities,
    sample_outcomes,
)
from qeom_thermal.simulator import StateVector, expectation


def effect_matrix(spec, outcome):
    """Dense tensor product of the effects selected by ``outcome`` (qubit 0 least significant)."""
    mat = np.ones((1, 1))
    for q in reversed(range(spec.n_qubits)):
        mat = np.kron(mat, spec.effects[q, outcome[q]])
    return mat


def test_completeness():
    spec = canonical_sic()
    assert np.allclose(spec.effects[0].sum(axis=0), np.eye(2), atol=1e-15)


def test_sic_overlaps():
    e = 2 * canonical_sic().effects[0]
    overlaps = np.einsum("iab,jba->ij", e, e).real
    assert np.allclose(overlaps, (2 * np.eye(4) + 1) / 3, atol=1e-12)


def test_tetrahedron():
    e = canonical_sic().effects[0]
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    bloch = np.array([[np.trace(2 * m @ p).real for p in paulis] for m in e])
    assert np.allclose(np.linalg.norm(bloch, axis=1), 1.0)
    dots = bloch @ bloch.T
    assert np.allclose(dots[~np.eye(4, dtype=bool)], -1 / 3)


def test_identity_weights():
    w = decompose_observable(PauliOperator.identity(1), canonical_sic())
    assert np.allclose(w.dense(), 1.0)


@pytest.mark.parametrize("letter", "IXYZ")
def test_single_letter_reconstruction(letter):
    spec = canonical_sic()
    op = PauliOperator.from_label(letter)
    w = decompose_observable(op, spec).dense()
    rebuilt = np.einsum("m,mij->ij", w, spec.effects[0])
    assert np.allclose(rebuilt, op.to_matrix(), atol=1e-12)
    assert np.all(np.abs(w) <= 3 + 1e-12)


def test_zz_factorizes():
    spec = canonical_sic(2)
    c = spec.letter_coefficients()[0, 3]
    w = decompose_observable(PauliOperator.from_label("ZZ"), spec)
    out = all_outcomes(2)
    assert np.allclose(w(out), c[out[:, 0]] * c[out[:, 1]])


@given(seeds, st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_frame_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    op = random_pauli(rng, n, hermitian=True)
    spec = canonical_sic(n)
    w = decompose_observable(op, spec).dense()
    assert np.isrealobj(w)
    rebuilt = sum(wm * effect_matrix(spec, m) for wm, m in zip(w, all_outcomes(n)))
    assert np.allclose(rebuilt, op.to_matrix(), atol=1e-10)


def test_not_informationally_complete():
    z = np.diag([1.0, 0.0])
    o = np.diag([0.0, 1.0])
    spec = PovmSpec(np.array([[z / 2, z / 2, o / 2, o / 2]]))
    with pytest.raises(NotInformationallyComplete):
        decompose_observable(PauliOperator.from_label("Z"), spec)


def test_qubit_mismatch():
    with pytest.raises(QubitCountMismatch):
        decompose_observable(PauliOperator.from_label("ZZ"), canonical_sic(3))


# ---------------------------------------------------------------------------
# probabilities and sampling


def test_probabilities_on_zero():
    p = outcome_probabilities(StateVector.basis(0, 1), canonical_sic())
    assert np.allclose(p, [1 / 2, 1 / 6, 1 / 6, 1 / 6])


@given(seeds, st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_probabilities_oracle(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    spec = canonical_sic(n)
    p = outcome_probabilities(psi, spec)
    want = [np.vdot(psi, effect_matrix(spec, m) @ psi).real for m in all_outcomes(n)]
    assert np.allclose(p, want, atol=1e-14)
    assert p.sum() == pytest.approx(1.0)


@given(seeds, st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_unbiased_exhaustive(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    op = random_pauli(rng, n, hermitian=True)
    spec = canonical_sic(n)
    mean = outcome_probabilities(psi, spec) @ decompose_observable(op, spec).dense()
    assert mean == pytest.approx(expectation(op, psi).real, abs=1e-10)


def test_plus_state_frequencies():
    psi = StateVector.normalized([1.0, 1.0])
    spec = canonical_sic()
    p = outcome_probabilities(psi, spec)
    rec = sample_outcomes(psi, spec, 10**6, seed=11)
    freq = rec.histogram() / rec.shots
    sigma = np.sqrt(p * (1 - p) / rec.shots)
    assert np.all(np.abs(freq - p) < 5 * sigma)


def test_joint_distribution_chi2():
    # conditional sampling must reproduce the joint, correlated distribution
    from scipy.stats import chisquare

    psi = StateVector.normalized([1, 0, 0, 0, 0, 0, 0, 1j])  # GHZ-like
    spec = canonical_sic(3)
    p = outcome_probabilities(psi, spec)
    rec = sample_outcomes(psi, spec, 200_000, seed=4)
    counts = rec.histogram()
    assert chisquare(counts, p * rec.shots).pvalue > 1e-4


def test_sampling_determinism():
    psi = random_state(np.random.default_rng(0), 3)
    spec = canonical_sic(3)
    a = sample_outcomes(psi, spec, 1, seed=42)
    b = sample_outcomes(psi, spec, 1, seed=42)
    assert np.array_equal(a.outcomes, b.outcomes)
    big_a = sample_outcomes(psi, spec, 5000, seed=7)
    big_b = sample_outcomes(psi, spec, 5000, seed=7)
    assert np.array_equal(big_a.outcomes, big_b.outcomes)
    assert not np.array_equal(big_a.outcomes, sample_outcomes(psi, spec, 5000, seed=8).outcomes)


def test_sampling_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_outcomes(StateVector.basis(0, 1), canonical_sic(), 0, seed=0)


def test_record_round_trip(tmp_path):
    rec = sample_outcomes(random_state(np.random.default_rng(1), 3), canonical_sic(3), 50, seed=9)
    rec.save(tmp_path / "r.csv")
    back = OutcomeRecord.load(tmp_path / "r.csv")
    assert np.array_equal(back.outcomes, rec.outcomes)
    assert back.seed == 9


# ---------------------------------------------------------------------------
# estimation


def test_identity_estimate():
    spec = canonical_sic(2)
    rec = sample_outcomes(StateVector.basis(0, 2), spec, 100, seed=0)
    res = estimate(decompose_observable(PauliOperator.identity(2), spec), rec)
    assert res.mean == 1.0
    assert res.standard_error == 0.0


def test_z_on_zero():
    spec = canonical_sic()
    rec = sample_outcomes(StateVector.basis(0, 1), spec, 10**6, seed=3)
    res = estimate(decompose_observable(PauliOperator.from_label("Z"), spec), rec)
    assert abs(res.mean - 1.0) < 5 * res.standard_error
    assert res.shots_used == 10**6


def test_empty_record():
    with pytest.raises(EmptyRecord):
        estimate(decompose_observable(PauliOperator.identity(1), canonical_sic()), OutcomeRecord(np.zeros((0, 1))))


def test_shared_record_many_observables():
    rng = np.random.default_rng(21)
    n = 3
    psi = random_state(rng, n)
    spec = canonical_sic(n)
    rec = sample_outcomes(psi, spec, 20000, seed=5)
    inside = 0
    for _ in range(100):
        op = random_pauli(rng, n, n_terms=3, hermitian=True)
        res = estimate(decompose_observable(op, spec), rec)
        inside += abs(res.mean - expectation(op, psi).real) < 5 * res.standard_error
    assert inside == 100


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_batch_matches_per_shot(seed):
    rng = np.random.default_rng(seed)
    n = 3
    psi = random_state(rng, n)
    spec = canonical_sic(n)
    rec = sample_outcomes(psi, spec, 500, seed=seed)
    op = random_pauli(rng, n, n_terms=10, hermitian=True)
    mean, se = estimate_pauli_strings(op.x, op.z, rec, spec)
    for k, label in enumerate(op.labels):
        res = estimate(decompose_observable(PauliOperator.from_label(label), spec), rec)
        assert mean[k] == pytest.approx(res.mean, abs=1e-12)
        assert se[k] == pytest.approx(res.standard_error, abs=1e-12)


def test_error_scaling():
    psi = random_state(np.random.default_rng(2), 2)
    spec = canonical_sic(2)
    op = PauliOperator.from_terms({"ZZ": 1.0, "XI": 0.5})
    w = decompose_observable(op, spec)
    spreads = []
    for shots in (100, 10000):
        spreads.append(np.std([estimate(w, sample_outcomes(psi, spec, shots, seed=s)).mean for s in range(100)]))
    ratio = spreads[0] / spreads[1]
    assert 10 / 1.3 < ratio < 10 * 1.3
