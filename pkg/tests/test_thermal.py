import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from conftest import random_pauli, seeds
from qeom_thermal.errors import DimensionMismatch, EmptySpectrum
from qeom_thermal.simulator import Spectrum
from qeom_thermal.thermal import average_energy, check_density_matrix, gibbs_state, trace_distance


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_spectrum(rng, dim, n_states):
    u = unitary_group.rvs(dim, random_state=rng)
    return Spectrum(np.sort(rng.normal(size=n_states)), u[:, :n_states])


def test_zero_temperature_limit():
    spec = Spectrum([-1.0, -0.99, 0.5], np.eye(4)[:, :3])
    rho = gibbs_state(spec, 1e6)
    want = np.zeros((4, 4))
    want[0, 0] = 1
    assert np.allclose(rho, want, atol=1e-10)


@pytest.mark.parametrize("beta", [1e-3, 1.0, 1e4])
def test_degenerate_pair(beta):
    a, b = np.eye(2)
    rho = gibbs_state(Spectrum([0.3, 0.3], np.stack([a, b], axis=1)), beta)
    assert np.allclose(rho, np.eye(2) / 2)


def test_two_level_closed_form():
    rho = gibbs_state(Spectrum([0.0, 1.0], np.eye(2)), 1.0)
    z = 1 + np.exp(-1)
    assert np.allclose(np.diag(rho).real, [1 / z, np.exp(-1) / z])


def test_gibbs_errors():
    with pytest.raises(EmptySpectrum):
        gibbs_state(Spectrum(np.zeros(0), np.zeros((4, 0))), 1.0)
    with pytest.raises(ValueError):
        gibbs_state(Spectrum([0.0], np.eye(2)[:, :1]), 0.0)


@given(seeds, st.floats(-3, 6))
@settings(max_examples=50, deadline=None)
def test_gibbs_is_density_matrix(seed, log_beta):
    rng = np.random.default_rng(seed)
    spec = random_spectrum(rng, 8, int(rng.integers(1, 9)))
    check_density_matrix(gibbs_state(spec, 10.0**log_beta))


def test_gibbs_large_energy_offset():
    spec = Spectrum([-1e4, -1e4 + 1.0], np.eye(2))
    rho = gibbs_state(spec, 1e3)
    assert np.isfinite(rho).all()
    assert np.trace(rho).real == pytest.approx(1.0)


def test_trace_distance_examples():
    rho = random_density(np.random.default_rng(0), 4)
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)
    a = np.diag([1.0, 0.0])
    b = np.diag([0.0, 1.0])
    assert trace_distance(a, b) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatch):
        trace_distance(np.eye(2) / 2, np.eye(4) / 4)


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_trace_distance_eigenvalue_oracle(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(rng, 4), random_density(rng, 4, rank=1)
    d = trace_distance(rho, sigma)
    assert d == pytest.approx(0.5 * np.abs(np.linalg.eigvalsh(rho - sigma)).sum(), abs=1e-12)
    assert 0.0 <= d <= 1.0 + 1e-9


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_trace_distance_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(rng, 4, rank=int(rng.integers(1, 5))) for _ in range(3))
    assert trace_distance(a, b) == pytest.approx(trace_distance(b, a), abs=1e-14)
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12
    u = unitary_group.rvs(4, random_state=rng)
    rotated = trace_distance(u @ a @ u.conj().T, u @ b @ u.conj().T)
    assert rotated == pytest.approx(trace_distance(a, b), abs=1e-10)


def test_average_energy_examples():
    h = np.diag([-1.0, 0.0, 1.0, 2.0])
    ground = np.zeros((4, 4))
    ground[0, 0] = 1
    assert average_energy(ground, h) == -1.0
    two_level = np.diag([0.0, 1.0])
    assert average_energy(np.eye(2) / 2, two_level) == pytest.approx(0.5)
    with pytest.raises(DimensionMismatch):
        average_energy(np.eye(2) / 2, h)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_average_energy_oracle(seed):
    rng = np.random.default_rng(seed)
    op = random_pauli(rng, 2, hermitian=True)
    rho = random_density(rng, 4)
    want = np.trace(rho @ op.to_matrix())
    assert abs(want.imag) < 1e-10
    assert average_energy(rho, op) == pytest.approx(want.real, abs=1e-12)
