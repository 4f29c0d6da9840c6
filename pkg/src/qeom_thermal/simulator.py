"""Dense statevector simulation and sector-resolved exact diagonalization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySector, NonHermitianInput, QubitCountMismatch
from .operators import PauliOperator

NORM_TOL = 1e-10
DEGENERACY_TOL = 1e-9
SECTOR_TOL = 1e-6


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size != 1 << n:
            raise ValueError(f"length {amps.size} is not a power of two")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {np.linalg.norm(amps)})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @classmethod
    def normalized(cls, amplitudes):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        return cls(amps / np.linalg.norm(amps))

    @classmethod
    def basis(cls, index: int, n_qubits: int):
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)


def _amps(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=np.complex128)


def _check_dims(op: PauliOperator, amps: np.ndarray):
    if amps.shape[-1] != 1 << op.n_qubits:
        raise QubitCountMismatch(f"operator on {op.n_qubits} qubits, state of length {amps.shape[-1]}")


def apply(op: PauliOperator, psi) -> np.ndarray:
    """``op |psi>`` without renormalization.  Accepts a batch of states (..., 2^N)."""
    amps = _amps(psi)
    _check_dims(op, amps)
    idx = np.arange(amps.shape[-1], dtype=np.int64)
    out = np.zeros(np.broadcast_shapes(amps.shape), dtype=np.complex128)
    for x, z, c in zip(op.x, op.z, op.coeffs):
        # <j| P |psi> = i^{xz} (-1)^{|(j^x)&z|} psi[j^x]
        src = idx ^ x
        sign = 1 - 2 * (np.bitwise_count(src & z) & 1).astype(np.int64)
        out += (c * 1j ** int(np.bitwise_count(x & z))) * sign * amps[..., src]
    return out


def expectation(op: PauliOperator, psi) -> complex:
    amps = _amps(psi)
    return complex(np.vdot(amps, apply(op, amps)))


def pauli_expectations(x, z, psi) -> np.ndarray:
    """Exact ``<psi|P_k|psi>`` for many Pauli strings given as mask arrays."""
    amps = _amps(psi)
    x = np.asarray(x, dtype=np.int64)[:, None]
    z = np.asarray(z, dtype=np.int64)[:, None]
    idx = np.arange(amps.size, dtype=np.int64)[None, :]
    src = idx ^ x
    sign = 1 - 2 * (np.bitwise_count(src & z) & 1).astype(np.int64)
    phase = np.array([1, 1j, -1, -1j])[np.bitwise_count(x & z)[:, 0] % 4]
    vals = phase * np.einsum("j,kj->k", amps.conj(), sign * amps[src])
    return vals.real


@dataclass(frozen=True)
class Spectrum:
    """Energies (ascending) and the matching states as columns of ``states``."""

    energies: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float).reshape(-1)
        s = np.asarray(self.states, dtype=np.complex128)
        if s.ndim != 2 or s.shape[1] != e.size:
            raise ValueError("states must be a (dim, n_states) array matching energies")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "states", s)

    def __len__(self):
        return self.energies.size

    @property
    def n_qubits(self) -> int:
        return self.states.shape[0].bit_length() - 1

    def state(self, k: int) -> StateVector:
        return StateVector(self.states[:, k])


def sector_mask(n_qubits: int, n_electrons: int, spin_2s: int | None = None) -> np.ndarray:
    """Computational basis states with the given particle number (and 2*Sz, blocked order)."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    mask = np.bitwise_count(idx) == n_electrons
    if spin_2s is not None:
        half = n_qubits // 2
        n_alpha = np.bitwise_count(idx & ((1 << half) - 1))
        n_beta = np.bitwise_count(idx >> half)
        mask &= (n_alpha.astype(int) - n_beta.astype(int)) == spin_2s
    return mask


def _canonical_basis(vecs: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis for span(vecs).

    Projects the computational basis vectors e_0, e_1, ... onto the span in
    order and Gram-Schmidt orthogonalizes them, keeping the first k
    independent ones.
    """
    k = vecs.shape[1]
    if k == 1:
        return vecs
    out = []
    proj = vecs @ vecs.conj().T
    for j in range(vecs.shape[0]):
        v = proj[:, j].copy()
        for u in out:
            v -= u * np.vdot(u, v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            out.append(v / nrm)
            if len(out) == k:
                break
    return np.stack(out, axis=1)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    # first component with magnitude within 1e-8 of the largest is made real positive
    mags = np.abs(vecs)
    pivot = np.argmax(mags > mags.max(axis=0) - 1e-8, axis=0)
    ph = vecs[pivot, np.arange(vecs.shape[1])]
    return vecs * (np.abs(ph) / ph)[None, :]


def _eigh_deterministic(mat: np.ndarray):
    w, v = np.linalg.eigh(mat)
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop] - w[start] < DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            v[:, start:stop] = _canonical_basis(v[:, start:stop])
        start = stop
    return w, _fix_phase(v)


def exact_eigenstates(h: PauliOperator, n_electrons: int, spin_2s: int | None = None) -> Spectrum:
    """All eigenpairs of ``h`` in the ``n_electrons`` (and optional 2*Sz) sector.

    When ``h`` conserves the requested quantum numbers the Hamiltonian is
    block diagonal in the computational basis and only the sector block is
    diagonalized.  Otherwise the full matrix is diagonalized and eigenvectors
    are kept when their expectation of the number operator matches.
    """
    n = h.n_qubits
    if n_electrons > n or n_electrons < 0:
        raise EmptySector(f"{n_electrons} electrons on {n} qubits")
    if not h.is_hermitian():
        raise NonHermitianInput("Hamiltonian has non-real Pauli coefficients")
    mat = h.to_matrix()
    mask = sector_mask(n, n_electrons, spin_2s)
    if not mask.any():
        raise EmptySector(f"no basis state with N={n_electrons}, 2Sz={spin_2s}")
    leak = np.abs(mat[np.ix_(~mask, mask)]).max(initial=0.0)
    if leak < 1e-12:
        w, v = _eigh_deterministic(mat[np.ix_(mask, mask)])
        states = np.zeros((mat.shape[0], w.size), dtype=np.complex128)
        states[mask] = v
        return Spectrum(w, states)

    w, v = _eigh_deterministic(mat)
    idx = np.arange(mat.shape[0], dtype=np.int64)
    occ = np.bitwise_count(idx).astype(float)
    probs = np.abs(v) ** 2
    n_mean = occ @ probs
    n_var = (occ ** 2) @ probs - n_mean ** 2
    keep = (np.abs(n_mean - n_electrons) < SECTOR_TOL) & (n_var < SECTOR_TOL)
    if spin_2s is not None:
        half = n // 2
        sz2 = (np.bitwise_count(idx & ((1 << half) - 1)).astype(float) - np.bitwise_count(idx >> half)) @ probs
        keep &= np.abs(sz2 - spin_2s) < SECTOR_TOL
    if not keep.any():
        raise EmptySector(f"no eigenstate with N={n_electrons}")
    return Spectrum(w[keep], v[:, keep])
