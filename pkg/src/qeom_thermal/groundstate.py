"""Reference ground states: Hartree-Fock determinant, UCCSD ansatz and a simplex VQE."""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .eom import ExcitationBasis
from .errors import OddElectronCount, SizeMismatch
from .operators import PauliOperator, spin_orbital
from .simulator import StateVector, expectation

MAX_EVALUATIONS = 5000
ENERGY_TOL = 1e-10


def hartree_fock_state(n_electrons: int, n_qubits: int) -> StateVector:
    if n_electrons % 2:
        raise OddElectronCount(f"closed-shell reference needs an even electron count, got {n_electrons}")
    if n_electrons > n_qubits:
        raise ValueError(f"{n_electrons} electrons do not fit on {n_qubits} qubits")
    n_spatial = n_qubits // 2
    index = 0
    for p in range(n_electrons // 2):
        for s in (0, 1):
            index |= 1 << spin_orbital(p, s, n_spatial)
    return StateVector.basis(index, n_qubits)


class _Generator:
    """exp(theta * G) for anti-Hermitian G = E - E^, via one eigendecomposition of iG."""

    def __init__(self, excitation: PauliOperator):
        g = (excitation - excitation.adjoint()).to_matrix()
        herm = 1j * g
        self.w, self.v = np.linalg.eigh((herm + herm.conj().T) / 2)

    def apply(self, theta: float, amps: np.ndarray) -> np.ndarray:
        # exp(theta G) = exp(-i theta (iG))
        return self.v @ (np.exp(-1j * theta * self.w) * (self.v.conj().T @ amps))


_GEN_CACHE: dict[int, list] = {}


def _generators(basis: ExcitationBasis) -> list[_Generator]:
    key = id(basis)
    hit = _GEN_CACHE.get(key)
    if hit is None or hit[0] is not basis:
        hit = (basis, [_Generator(e.pauli) for e in basis])
        _GEN_CACHE[key] = hit
    return hit[1]


def uccsd_state(params, basis: ExcitationBasis, ref: StateVector) -> StateVector:
    """prod_k exp(theta_k (E_k - E_k^)) |ref>, first generator applied first."""
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.size != len(basis):
        raise SizeMismatch(f"{params.size} parameters for {len(basis)} excitations")
    amps = ref.amplitudes.copy()
    for theta, gen in zip(params, _generators(basis)):
        if theta != 0.0:
            amps = gen.apply(theta, amps)
    return StateVector.normalized(amps)


@dataclass(frozen=True)
class VqeResult:
    energy: float
    params: np.ndarray
    state: StateVector
    n_evaluations: int
    converged: bool


def vqe_minimize(
    h: PauliOperator,
    basis: ExcitationBasis,
    ref: StateVector,
    seed: int = 0,
    restarts: int = 3,
    max_evaluations: int = MAX_EVALUATIONS,
) -> VqeResult:
    """Nelder-Mead minimization of <psi(theta)|h|psi(theta)>.

    The first run starts from theta = 0; further restarts start from small
    seeded perturbations of the best point so far.  The best point over all
    runs is returned; ``converged`` is False when any run hit the evaluation
    cap, in which case a RuntimeWarning is also issued.
    """
    hmat = h.to_matrix()
    count = 0

    def energy(theta):
        nonlocal count
        count += 1
        psi = uccsd_state(theta, basis, ref).amplitudes
        return float(np.real(np.vdot(psi, hmat @ psi)))

    rng = np.random.default_rng(seed)
    best_x = np.zeros(len(basis))
    best_e = energy(best_x)
    converged = True
    if len(basis) == 0:
        return VqeResult(best_e, best_x, ref, count, True)
    for r in range(restarts):
        x0 = best_x if r == 0 else best_x + rng.normal(scale=0.05, size=best_x.size)
        res = minimize(
            energy, x0, method="Nelder-Mead",
            options={"fatol": ENERGY_TOL, "xatol": 1e-8, "maxfev": max_evaluations, "adaptive": len(basis) > 4},
        )
        if res.nfev >= max_evaluations and not res.success:
            converged = False
        if res.fun < best_e - 1e-14:
            best_e, best_x = float(res.fun), np.asarray(res.x)
    if not converged:
        warnings.warn("VQE reached the evaluation cap; returning best point found", RuntimeWarning, stacklevel=2)
    state = uccsd_state(best_x, basis, ref)
    return VqeResult(float(np.real(expectation(h, state))), best_x, state, count, converged)


def cached_vqe(h: PauliOperator, basis: ExcitationBasis, ref: StateVector, seed: int, restarts: int, cache_dir) -> VqeResult:
    """vqe_minimize with the optimal parameters stored under ``cache_dir``."""
    if cache_dir is None:
        return vqe_minimize(h, basis, ref, seed=seed, restarts=restarts)
    digest = hashlib.sha256()
    for arr in (h.x, h.z, h.coeffs, ref.amplitudes):
        digest.update(np.ascontiguousarray(arr).tobytes())
    digest.update(f"{len(basis)}:{seed}:{restarts}".encode())
    path = Path(cache_dir) / f"vqe_{digest.hexdigest()[:16]}.json"
    if path.exists():
        data = json.loads(path.read_text())
        params = np.asarray(data["params"])
        state = uccsd_state(params, basis, ref)
        return VqeResult(data["energy"], params, state, data["n_evaluations"], data["converged"])
    res = vqe_minimize(h, basis, ref, seed=seed, restarts=restarts)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({
        "energy": res.energy, "params": res.params.tolist(),
        "n_evaluations": res.n_evaluations, "converged": res.converged,
    }))
    return res
