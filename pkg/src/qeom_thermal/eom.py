"""Excitation basis, EOM matrix assembly and the generalized eigenvalue problem."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import MissingExpectation, QubitCountMismatch, SingularMetric
from .operators import FermionOperator, PauliOperator, commutator, jordan_wigner, spin_orbital
from .simulator import Spectrum, StateVector, apply

ETA_DEFAULT = 1e-7
IMAG_TOL = 1e-6
ENERGY_FLOOR = 1e-8
ILL_CONDITIONED = 1e10
DISCARD_NORM = 1e-6
MATRICES = ("M", "Q", "V", "W")


@dataclass(frozen=True)
class Excitation:
    order: int
    occupied: tuple[int, ...]
    virtual: tuple[int, ...]
    fermion: FermionOperator
    pauli: PauliOperator


@dataclass(frozen=True)
class ExcitationBasis:
    entries: tuple[Excitation, ...]
    n_qubits: int

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


def excitation_count(n_occ: int, n_virt: int) -> int:
    from math import comb

    return 2 * n_occ * n_virt + n_occ**2 * n_virt**2 + 2 * comb(n_occ, 2) * comb(n_virt, 2)


def generate_excitation_basis(n_occ_spatial: int, n_virt_spatial: int) -> ExcitationBasis:
    """Spin-conserving singles and doubles out of a closed-shell reference.

    Spatial orbitals ``0..n_occ-1`` are occupied.  Order: alpha singles,
    beta singles, then alpha-alpha, alpha-beta and beta-beta doubles.
    """
    n = n_occ_spatial + n_virt_spatial
    n_qubits = 2 * n
    occ = range(n_occ_spatial)
    virt = range(n_occ_spatial, n)
    specs = []
    for s in (0, 1):
        for i, m in itertools.product(occ, virt):
            specs.append((1, (spin_orbital(i, s, n),), (spin_orbital(m, s, n),)))
    for s1, s2 in ((0, 0), (0, 1), (1, 1)):
        if s1 == s2:
            occ_pairs = itertools.combinations(occ, 2)
            virt_pairs = list(itertools.combinations(virt, 2))
        else:
            occ_pairs = itertools.product(occ, occ)
            virt_pairs = list(itertools.product(virt, virt))
        for (i, j) in occ_pairs:
            for (m, k) in virt_pairs:
                specs.append((
                    2,
                    (spin_orbital(i, s1, n), spin_orbital(j, s2, n)),
                    (spin_orbital(m, s1, n), spin_orbital(k, s2, n)),
                ))
    entries = []
    for order, o, v in specs:
        # a_m^ a_n^ a_j a_i for occupied (i, j) -> virtual (m, n)
        ferm = FermionOperator.excitation(v, o)
        entries.append(Excitation(order, o, v, ferm, jordan_wigner(ferm, n_qubits)))
    return ExcitationBasis(tuple(entries), n_qubits)


# ---------------------------------------------------------------------------
# observables


@dataclass
class ObservableTable:
    """Pauli operators for every (matrix, row, col) element.

    ``strings`` lists the distinct non-identity Pauli strings; ``coefficients``
    is a sparse (4*D*D, len(strings)) matrix so that the flattened M, Q, V, W
    equal ``coefficients @ <strings> + identity``.
    """

    dim: int
    n_qubits: int
    operators: dict[tuple[str, int, int], PauliOperator]
    strings: list[str]
    x: np.ndarray
    z: np.ndarray
    coefficients: sp.csr_matrix
    identity: np.ndarray
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {s: k for k, s in enumerate(self.strings)}

    @property
    def n_observables(self) -> int:
        return len(self.strings)

    def element_counts(self) -> dict[str, int]:
        return {
            name: sum(1 for (m, _, _), op in self.operators.items() if m == name and not op.is_zero())
            for name in MATRICES
        }


def _element_operators(h: PauliOperator, basis: ExcitationBasis):
    ops = [e.pauli for e in basis]
    dags = [e.adjoint() for e in ops]
    h_e = [commutator(h, e) for e in ops]       # [H, E_v]
    h_ed = [commutator(h, ed) for ed in dags]   # [H, E_v^]
    out = {}
    for mu, nu in itertools.product(range(len(ops)), repeat=2):
        ed_mu = dags[mu]
        # [A,H,C] = ([[A,H],C] + [A,[H,C]])/2 with [A,H] = -[H,A]
        out["M", mu, nu] = (commutator(ed_mu, h_e[nu]) - commutator(h_ed[mu], ops[nu])) * 0.5
        out["Q", mu, nu] = (commutator(ed_mu, h_ed[nu]) - commutator(h_ed[mu], dags[nu])) * -0.5
        out["V", mu, nu] = commutator(ed_mu, ops[nu])
        out["W", mu, nu] = -commutator(ed_mu, dags[nu])
    return out


def matrix_element_observables(h: PauliOperator, basis: ExcitationBasis) -> ObservableTable:
    if h.n_qubits != basis.n_qubits:
        raise QubitCountMismatch(f"Hamiltonian on {h.n_qubits} qubits, basis on {basis.n_qubits}")
    d = len(basis)
    n = h.n_qubits
    ops = _element_operators(h, basis)
    keys_all = []
    for op in ops.values():
        keys_all.append((op.x << n) | op.z)
    uniq = np.unique(np.concatenate(keys_all)) if keys_all else np.zeros(0, dtype=np.int64)
    uniq = uniq[uniq != 0]
    x, z = uniq >> n, uniq & ((1 << n) - 1)
    # keep strings in label order
    probe = PauliOperator(n, x, z, np.ones(len(x)))
    x, z = probe.x, probe.z
    strings = probe.labels
    keys = (x << n) | z
    lookup = dict(zip(keys.tolist(), range(len(keys))))

    rows, cols, vals = [], [], []
    ident = np.zeros(4 * d * d, dtype=np.complex128)
    for (name, mu, nu), op in ops.items():
        r = _flat_index(name, mu, nu, d)
        opkeys = ((op.x << n) | op.z).tolist()
        for key, c in zip(opkeys, op.coeffs):
            if key == 0:
                ident[r] += c
            else:
                rows.append(r)
                cols.append(lookup[key])
                vals.append(c)
    coef = sp.csr_matrix((np.asarray(vals, dtype=np.complex128), (rows, cols)), shape=(4 * d * d, len(strings)))
    return ObservableTable(d, n, ops, strings, x, z, coef, ident)


def _flat_index(name, mu, nu, d):
    return MATRICES.index(name) * d * d + mu * d + nu


@dataclass(frozen=True)
class EomMatrices:
    M: np.ndarray
    Q: np.ndarray
    V: np.ndarray
    W: np.ndarray

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    def symmetrized(self) -> "EomMatrices":
        """Project onto the exact symmetry classes (M, V Hermitian; Q symmetric; W antisymmetric)."""
        return EomMatrices(
            (self.M + self.M.conj().T) / 2,
            (self.Q + self.Q.T) / 2,
            (self.V + self.V.conj().T) / 2,
            (self.W - self.W.T) / 2,
        )

    def pencil(self) -> tuple[np.ndarray, np.ndarray]:
        M, Q, V, W = self.M, self.Q, self.V, self.W
        a = np.block([[M, Q], [Q.conj(), M.conj()]])
        b = np.block([[V, W], [-W.conj(), -V.conj()]])
        return a, b


def assemble_eom_matrices(table: ObservableTable, expectations) -> EomMatrices:
    """Contract the observable table with Pauli-string expectation values.

    ``expectations`` is either a mapping label -> value or an array aligned
    with ``table.strings``.
    """
    if isinstance(expectations, Mapping):
        vec = np.empty(table.n_observables)
        for k, label in enumerate(table.strings):
            try:
                vec[k] = expectations[label]
            except KeyError:
                raise MissingExpectation(label) from None
    else:
        vec = np.asarray(expectations, dtype=float)
        if vec.shape != (table.n_observables,):
            raise ValueError(f"expected {table.n_observables} expectation values, got shape {vec.shape}")
    flat = table.coefficients @ vec + table.identity
    d = table.dim
    m, q, v, w = flat.reshape(4, d, d)
    return EomMatrices(m, q, v, w)


# ---------------------------------------------------------------------------
# generalized eigenvalue problem


@dataclass(frozen=True)
class EomSolution:
    energies: np.ndarray
    X: np.ndarray  # (n_roots, D)
    Y: np.ndarray
    retained_dim: int
    condition_number: float
    ill_conditioned: bool
    n_rejected: int  # pencil roots with E > 0 half lost to complex/non-positive values
    all_eigenvalues: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return self.energies.size


def solve_gep(mats: EomMatrices, eta: float = ETA_DEFAULT) -> EomSolution:
    """Solve A z = E B z for the 2D x 2D qEOM pencil.

    The metric B is canonically orthogonalized: eigendirections with
    |eigenvalue| < eta are dropped, the rest rescaled to unit modulus.  The
    reduced problem sign(b) T^ A T c = E c is solved as an ordinary
    eigenproblem and roots that are real (|Im| < 1e-6) and positive kept.
    """
    a, b = mats.pencil()
    d = mats.dim
    bh = (b + b.conj().T) / 2
    bvals, bvecs = np.linalg.eigh(bh)
    keep = np.abs(bvals) >= eta
    if not keep.any():
        raise SingularMetric(f"all {bvals.size} metric directions below eta={eta:g}")
    bv = np.abs(bvals[keep])
    cond = float(bv.max() / bv.min())
    t = bvecs[:, keep] / np.sqrt(bv)[None, :]
    sign = np.sign(bvals[keep])
    reduced = sign[:, None] * (t.conj().T @ a @ t)
    evals, evecs = np.linalg.eig(reduced)
    z = t @ evecs
    real = (np.abs(evals.imag) < IMAG_TOL) & (evals.real > ENERGY_FLOOR)
    order = np.argsort(evals.real[real])
    energies = evals.real[real][order]
    z = z[:, real][:, order]
    # normalize each root to unit metric norm where it is positive
    for k in range(z.shape[1]):
        nrm = np.real(np.vdot(z[:, k], bh @ z[:, k]))
        z[:, k] /= np.sqrt(abs(nrm)) if abs(nrm) > 1e-14 else np.linalg.norm(z[:, k])
    expected = int(np.count_nonzero(sign > 0))
    ill = cond > ILL_CONDITIONED
    if ill:
        warnings.warn(f"qEOM metric condition number {cond:.3g} exceeds {ILL_CONDITIONED:g}", RuntimeWarning, stacklevel=2)
    return EomSolution(
        energies=energies,
        X=z[:d].T.copy(),
        Y=z[d:].T.copy(),
        retained_dim=int(keep.sum()),
        condition_number=cond,
        ill_conditioned=ill,
        n_rejected=max(expected - energies.size, 0),
        all_eigenvalues=evals,
    )


@dataclass(frozen=True)
class ReconstructedSpectrum:
    spectrum: Spectrum
    n_discarded: int
    kept_roots: tuple[int, ...]


def excited_state_images(basis: ExcitationBasis, gs) -> tuple[np.ndarray, np.ndarray]:
    """Rows E_mu|0> and E_mu^|0> for every basis entry."""
    amps = gs.amplitudes if isinstance(gs, StateVector) else np.asarray(gs)
    up = np.stack([apply(e.pauli, amps) for e in basis]) if len(basis) else np.zeros((0, amps.size))
    down = np.stack([apply(e.pauli.adjoint(), amps) for e in basis]) if len(basis) else np.zeros((0, amps.size))
    return up, down


def reconstruct_excited_states(
    sol: EomSolution, basis: ExcitationBasis, gs, gs_energy: float, images=None
) -> ReconstructedSpectrum:
    """States |n> ~ sum_mu (X_mu E_mu - Y_mu E_mu^) |0>, orthogonalized in energy order."""
    amps = gs.amplitudes if isinstance(gs, StateVector) else np.asarray(gs, dtype=np.complex128)
    up, down = images if images is not None else excited_state_images(basis, amps)
    raw = sol.X @ up - sol.Y @ down if len(sol) else np.zeros((0, amps.size))
    accepted = [amps / np.linalg.norm(amps)]
    energies = [gs_energy]
    kept = []
    discarded = 0
    for k, vec in enumerate(raw):
        nrm = np.linalg.norm(vec)
        if nrm < DISCARD_NORM:
            discarded += 1
            continue
        v = vec / nrm
        for _ in range(2):
            for u in accepted:
                v = v - u * np.vdot(u, v)
        nrm2 = np.linalg.norm(v)
        if nrm2 < DISCARD_NORM:
            discarded += 1
            continue
        accepted.append(v / nrm2)
        energies.append(gs_energy + sol.energies[k])
        kept.append(k)
    spec = Spectrum(np.asarray(energies), np.stack(accepted, axis=1))
    return ReconstructedSpectrum(spec, discarded, tuple(kept))
