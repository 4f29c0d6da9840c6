"""Local IC-POVM measurement: effects, dual weights, shot sampling and estimation.

Outcome strings are arrays of per-qubit effect indices in {0, 1, 2, 3},
column ``q`` holding the outcome of qubit ``q``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyRecord, NotInformationallyComplete, QubitCountMismatch
from .operators import PauliOperator

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
LETTERS = "IXYZ"


@dataclass(frozen=True)
class PovmSpec:
    """Per-qubit 4-outcome POVM; ``effects[q, m]`` is a 2x2 matrix."""

    effects: np.ndarray

    def __post_init__(self):
        eff = np.asarray(self.effects, dtype=np.complex128)
        if eff.ndim != 4 or eff.shape[1:] != (4, 2, 2):
            raise ValueError(f"effects must have shape (n_qubits, 4, 2, 2), got {eff.shape}")
        if not np.allclose(eff.sum(axis=1), np.eye(2), atol=1e-12):
            raise ValueError("effects do not sum to the identity")
        object.__setattr__(self, "effects", eff)

    @property
    def n_qubits(self) -> int:
        return self.effects.shape[0]

    def letter_coefficients(self) -> np.ndarray:
        """c[q, letter, m] with P_letter = sum_m c[q, letter, m] Pi_{q,m} (letters I, X, Y, Z)."""
        out = np.empty((self.n_qubits, 4, 4))
        for q in range(self.n_qubits):
            frame = self.effects[q].reshape(4, 4).T  # columns: vec(Pi_m)
            if abs(np.linalg.det(frame)) < 1e-12:
                raise NotInformationallyComplete(f"effects on qubit {q} are linearly dependent")
            for a, letter in enumerate(LETTERS):
                c = np.linalg.solve(frame, _PAULI[letter].reshape(4))
                out[q, a] = c.real
        # solve() leaves ~1e-16 noise on exact values (all ones for I); snap integers
        near = np.abs(out - np.round(out)) < 1e-13
        out[near] = np.round(out[near])
        return out


def sic_vectors() -> np.ndarray:
    """Unnormalized tetrahedron vectors |0>, |0> + sqrt2 e^{2 pi i (k-1)/3} |1>."""
    vecs = [np.array([1.0, 0.0], dtype=complex)]
    for k in (1, 2, 3):
        vecs.append(np.array([1.0, np.sqrt(2) * np.exp(2j * np.pi * (k - 1) / 3)]))
    return np.array(vecs)


def canonical_sic(n_qubits: int = 1) -> PovmSpec:
    vecs = sic_vectors()
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    effects = 0.5 * np.einsum("mi,mj->mij", vecs, vecs.conj())
    return PovmSpec(np.broadcast_to(effects, (n_qubits, 4, 2, 2)).copy())


def _letter_codes(op: PauliOperator) -> np.ndarray:
    # per-term, per-qubit index into LETTERS
    q = np.arange(op.n_qubits)
    xb = (op.x[:, None] >> q) & 1
    zb = (op.z[:, None] >> q) & 1
    return (xb + 3 * zb - 2 * xb * zb).astype(np.int64)


class WeightFunction:
    """outcome string m -> omega_m for a fixed observable."""

    def __init__(self, op: PauliOperator, spec: PovmSpec):
        if op.n_qubits != spec.n_qubits:
            raise QubitCountMismatch(f"observable on {op.n_qubits} qubits, POVM on {spec.n_qubits}")
        self.n_qubits = op.n_qubits
        self.coeffs = op.coeffs
        self.letters = _letter_codes(op)
        self.table = spec.letter_coefficients()

    def __call__(self, outcomes) -> np.ndarray:
        m = np.atleast_2d(np.asarray(outcomes, dtype=np.int64))
        q = np.arange(self.n_qubits)
        weights = np.zeros(m.shape[0], dtype=np.complex128)
        for coeff, letters in zip(self.coeffs, self.letters):
            weights += coeff * np.prod(self.table[q, letters, m], axis=1)
        if np.all(np.abs(weights.imag) < 1e-12):
            return weights.real
        return weights

    def dense(self) -> np.ndarray:
        """omega for all 4^N outcomes, flat index sum_q m_q 4^q."""
        return self(all_outcomes(self.n_qubits))


def decompose_observable(op: PauliOperator, spec: PovmSpec) -> WeightFunction:
    return WeightFunction(op, spec)


def all_outcomes(n_qubits: int) -> np.ndarray:
    idx = np.arange(4**n_qubits)
    return (idx[:, None] >> (2 * np.arange(n_qubits))) & 3


def outcome_probabilities(psi, spec: PovmSpec) -> np.ndarray:
    """Exact p_m for all 4^N outcome strings (flat index sum_q m_q 4^q)."""
    amps = np.asarray(getattr(psi, "amplitudes", psi), dtype=np.complex128)
    n = spec.n_qubits
    psi_t = amps.reshape((2,) * n)  # axis a <-> qubit n-1-a
    ket = [3 * (n - 1 - a) for a in range(n)]
    bra = [3 * (n - 1 - a) + 1 for a in range(n)]
    args = [psi_t, ket, psi_t.conj(), bra]
    for q in range(n):
        # Tr[Pi rho] = sum_ij Pi[j, i] rho[i, j]
        args += [spec.effects[q], [3 * q + 2, 3 * q + 1, 3 * q]]
    out = [3 * q + 2 for q in range(n - 1, -1, -1)]
    return np.einsum(*args, out, optimize=True).real.reshape(-1)


@dataclass(frozen=True)
class OutcomeRecord:
    outcomes: np.ndarray  # (S, N) uint8
    seed: int | None = None

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=np.uint8)
        if out.ndim != 2:
            raise ValueError("outcomes must be a (shots, qubits) array")
        if out.size and out.max() > 3:
            raise ValueError("outcome indices must lie in 0..3")
        object.__setattr__(self, "outcomes", out)

    @property
    def shots(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.outcomes.shape[1]

    def histogram(self) -> np.ndarray:
        """Counts over the 4^N outcome strings."""
        flat = (self.outcomes.astype(np.int64) << (2 * np.arange(self.n_qubits))).sum(axis=1)
        return np.bincount(flat, minlength=4**self.n_qubits)

    def save(self, path) -> None:
        """CSV, one row per shot, one column per qubit."""
        path = Path(path)
        header = ",".join(f"q{q}" for q in range(self.n_qubits))
        if self.seed is not None:
            header = f"seed={self.seed}\n" + header
        np.savetxt(path, self.outcomes, fmt="%d", delimiter=",", header=header, comments="# ")

    @classmethod
    def load(cls, path) -> "OutcomeRecord":
        seed = None
        with open(path) as f:
            first = f.readline()
        if first.startswith("# seed="):
            seed = int(first.split("=", 1)[1])
        data = np.loadtxt(path, delimiter=",", dtype=np.int64, comments="#", ndmin=2)
        return cls(data.astype(np.uint8), seed)


def sample_outcomes(psi, spec: PovmSpec, shots: int, seed) -> OutcomeRecord:
    """Draw ``shots`` outcome strings by measuring qubit 0, 1, ... in turn.

    Shots sharing a prefix of outcomes share a post-measurement state, so the
    conditional distribution of the next qubit is computed once per distinct
    prefix and the shots are split among the 4 outcomes with a multinomial
    draw.  The resulting strings are shuffled into a sequence of i.i.d. shots.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    amps = np.asarray(getattr(psi, "amplitudes", psi), dtype=np.complex128)
    n = spec.n_qubits
    if amps.size != 1 << n:
        raise QubitCountMismatch(f"state of length {amps.size}, POVM on {n} qubits")
    rng = np.random.default_rng(seed)
    kraus = np.array([_psd_sqrt(e) for e in spec.effects.reshape(-1, 2, 2)]).reshape(n, 4, 2, 2)

    states = (amps / np.linalg.norm(amps))[None, :]
    counts = np.array([shots], dtype=np.int64)
    prefixes = np.zeros((1, 0), dtype=np.uint8)
    for q in range(n):
        # index = hi * 2^{q+1} + b * 2^q + lo
        phi = states.reshape(len(states), -1, 2, 1 << q)
        rho_q = np.einsum("gaib,gajb->gij", phi, phi.conj())
        probs = np.einsum("mji,gij->gm", spec.effects[q], rho_q).real
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum(axis=1, keepdims=True)
        split = rng.multinomial(counts, probs)
        g_idx, m_idx = np.nonzero(split)
        counts = split[g_idx, m_idx]
        prefixes = np.concatenate([prefixes[g_idx], m_idx[:, None].astype(np.uint8)], axis=1)
        if q == n - 1:
            break
        new = np.einsum("gij,gajb->gaib", kraus[q][m_idx], phi[g_idx])
        new = new.reshape(len(g_idx), -1)
        states = new / np.linalg.norm(new, axis=1, keepdims=True)
    outcomes = np.repeat(prefixes, counts, axis=0)
    outcomes = outcomes[rng.permutation(shots)]
    return OutcomeRecord(outcomes, seed if isinstance(seed, (int, np.integer)) else None)


def _psd_sqrt(mat):
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    standard_error: float
    shots_used: int


def estimate(weights: WeightFunction, rec: OutcomeRecord) -> EstimatorResult:
    """Sample mean of omega_{m_s} and sqrt((<w^2> - <w>^2) / S) with empirical moments."""
    if rec.shots == 0:
        raise EmptyRecord("outcome record has no shots")
    w = np.real_if_close(weights(rec.outcomes))
    mean = w.mean()
    var = max(float(np.mean(np.abs(w) ** 2) - abs(mean) ** 2), 0.0)
    return EstimatorResult(mean, float(np.sqrt(var / rec.shots)), rec.shots)


def _transform(tensor: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """Apply mats[q] (letter x outcome) along axis q of an N-axis 4^N tensor."""
    for q in range(mats.shape[0]):
        tensor = np.moveaxis(np.tensordot(mats[q], tensor, axes=([1], [q])), 0, q)
    return tensor


def estimate_pauli_strings(x, z, rec: OutcomeRecord, spec: PovmSpec):
    """Estimates and standard errors for many Pauli strings from one record.

    Uses the empirical outcome distribution f_m, so sum_m f_m omega_m is the
    same number as the per-shot sample mean, but every string costs O(1)
    after one O(N 4^N) transform.
    """
    if rec.shots == 0:
        raise EmptyRecord("outcome record has no shots")
    n = spec.n_qubits
    freq = (rec.histogram() / rec.shots).reshape((4,) * n, order="F")
    table = spec.letter_coefficients()
    first = _transform(freq, table)
    second = _transform(freq, table**2)
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    q = np.arange(n)
    xb = (x[:, None] >> q) & 1
    zb = (z[:, None] >> q) & 1
    letters = xb + 3 * zb - 2 * xb * zb
    flat = (letters * (4 ** q)).sum(axis=1)
    mean = first.reshape(-1, order="F")[flat]
    m2 = second.reshape(-1, order="F")[flat]
    se = np.sqrt(np.clip(m2 - mean**2, 0.0, None) / rec.shots)
    return mean, se
