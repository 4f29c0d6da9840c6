"""Gibbs states, trace distance and thermal energy error."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, EmptySpectrum
from .operators import PauliOperator
from .simulator import Spectrum


def gibbs_state(spec: Spectrum, beta: float) -> np.ndarray:
    """Normalized sum_n exp(-beta E_n) |n><n| / Z over the states in ``spec``.

    Energies are shifted by their minimum before exponentiation.
    """
    if len(spec) == 0:
        raise EmptySpectrum("cannot build a thermal state from an empty spectrum")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    e = spec.energies
    w = np.exp(-beta * (e - e.min()))
    w /= w.sum()
    v = spec.states
    return (v * w[None, :]) @ v.conj().T


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> None:
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho)}")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -tol:
        raise ValueError("density matrix has negative eigenvalues")


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"{rho.shape} vs {sigma.shape}")
    return 0.5 * float(np.linalg.svd(rho - sigma, compute_uv=False).sum())


def average_energy(rho: np.ndarray, h) -> float:
    """Tr[rho H]; ``h`` may be a PauliOperator or a dense matrix."""
    hmat = h.to_matrix() if isinstance(h, PauliOperator) else np.asarray(h)
    if hmat.shape != rho.shape:
        raise DimensionMismatch(f"Hamiltonian {hmat.shape} vs density matrix {rho.shape}")
    # Tr[rho H] = sum_ij rho_ij H_ji
    return float(np.real(np.sum(rho * hmat.T)))
