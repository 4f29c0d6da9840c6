"""Fermionic and Pauli operator algebra.

Pauli strings are stored in symplectic form: two integer bitmasks ``x`` and
``z`` where bit ``q`` refers to qubit ``q``, and

    P(x, z) = i^{popcount(x & z)} X^x Z^z

so that ``x = z = 1`` on a qubit is exactly ``Y``.  Text labels list qubit 0
first, e.g. ``"XIZ"`` is X on qubit 0 and Z on qubit 2.  Dense matrices use
qubit 0 as the least significant bit of the basis index.

Spin orbitals use the blocked ordering: spatial orbital ``p`` with spin
alpha is mode ``p`` and with spin beta is mode ``n_spatial + p``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import IndexOutOfRange, QubitCountMismatch

PRUNE_TOL = 1e-12

_LETTER_CODE = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_CODE_LETTER = {v: k for k, v in _LETTER_CODE.items()}


def spin_orbital(p: int, spin: int, n_spatial: int) -> int:
    """Blocked spin-orbital index; spin 0 is alpha, 1 is beta."""
    return p + spin * n_spatial


def _popcount(a):
    return np.bitwise_count(a).astype(np.int64)


def _label_to_masks(label: str) -> tuple[int, int]:
    x = z = 0
    for q, ch in enumerate(label.upper()):
        try:
            xb, zb = _LETTER_CODE[ch]
        except KeyError:
            raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
        x |= xb << q
        z |= zb << q
    return x, z


def _masks_to_label(x: int, z: int, n: int) -> str:
    return "".join(_CODE_LETTER[((x >> q) & 1, (z >> q) & 1)] for q in range(n))


def _sort_key(x, z, n):
    # base-4 digits I<X<Y<Z with qubit 0 most significant: integer order == label order
    key = np.zeros(len(x), dtype=np.int64)
    for q in range(n):
        xb = (x >> q) & 1
        zb = (z >> q) & 1
        key = key * 4 + (xb + 3 * zb - 2 * xb * zb)
    return key


class PauliOperator:
    """Weighted sum of Pauli strings on ``n_qubits`` qubits.

    Instances are treated as immutable; every operation returns a new,
    simplified operator with terms in lexicographic label order.
    """

    __slots__ = ("n_qubits", "x", "z", "coeffs")

    def __init__(self, n_qubits: int, x=(), z=(), coeffs=(), simplify: bool = True):
        self.n_qubits = int(n_qubits)
        self.x = np.asarray(x, dtype=np.int64).reshape(-1)
        self.z = np.asarray(z, dtype=np.int64).reshape(-1)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if simplify:
            self._simplify()

    # construction -----------------------------------------------------
    @classmethod
    def from_terms(cls, terms: Mapping[str, complex] | Iterable[tuple[str, complex]], n_qubits=None):
        items = list(terms.items()) if isinstance(terms, Mapping) else list(terms)
        if n_qubits is None:
            if not items:
                raise ValueError("n_qubits is required for an empty operator")
            n_qubits = len(items[0][0])
        xs, zs, cs = [], [], []
        for label, c in items:
            if len(label) != n_qubits:
                raise QubitCountMismatch(f"label {label!r} does not have {n_qubits} qubits")
            x, z = _label_to_masks(label)
            xs.append(x)
            zs.append(z)
            cs.append(c)
        return cls(n_qubits, xs, zs, cs)

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0):
        return cls.from_terms([(label, coeff)])

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0):
        return cls(n_qubits, [0], [0], [coeff])

    @classmethod
    def zero(cls, n_qubits: int):
        return cls(n_qubits)

    @classmethod
    def single(cls, letter: str, qubit: int, n_qubits: int, coeff: complex = 1.0):
        x, z = _LETTER_CODE[letter.upper()]
        return cls(n_qubits, [x << qubit], [z << qubit], [coeff])

    def _simplify(self, tol: float = PRUNE_TOL):
        n = self.n_qubits
        if len(self.coeffs) == 0:
            return
        keys = (self.x << n) | self.z
        uniq, inv = np.unique(keys, return_inverse=True)
        coeffs = np.zeros(len(uniq), dtype=np.complex128)
        np.add.at(coeffs, inv, self.coeffs)
        coeffs.real[np.abs(coeffs.real) < tol] = 0.0
        coeffs.imag[np.abs(coeffs.imag) < tol] = 0.0
        keep = coeffs != 0
        uniq, coeffs = uniq[keep], coeffs[keep]
        x = uniq >> n
        z = uniq & ((1 << n) - 1)
        order = np.argsort(_sort_key(x, z, n), kind="stable")
        self.x, self.z, self.coeffs = x[order], z[order], coeffs[order]

    # views ------------------------------------------------------------
    def __len__(self):
        return len(self.coeffs)

    @property
    def labels(self) -> list[str]:
        return [_masks_to_label(int(x), int(z), self.n_qubits) for x, z in zip(self.x, self.z)]

    @property
    def terms(self) -> dict[str, complex]:
        return dict(zip(self.labels, (complex(c) for c in self.coeffs)))

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def identity_coefficient(self) -> complex:
        hit = (self.x == 0) & (self.z == 0)
        return complex(self.coeffs[hit].sum())

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        idx = np.arange(dim, dtype=np.int64)
        mat = np.zeros((dim, dim), dtype=np.complex128)
        for x, z, c in zip(self.x, self.z, self.coeffs):
            phase = 1j ** int(np.bitwise_count(x & z)) * (1 - 2 * (_popcount(idx & z) & 1))
            np.add.at(mat, (idx ^ x, idx), c * phase)
        return mat

    def __repr__(self):
        if self.is_zero():
            return f"PauliOperator(0, n_qubits={self.n_qubits})"
        body = " + ".join(f"({c:.6g})*{lab}" for lab, c in self.terms.items())
        return f"PauliOperator({body})"

    # algebra ----------------------------------------------------------
    def _check(self, other):
        if self.n_qubits != other.n_qubits:
            raise QubitCountMismatch(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other):
        if not isinstance(other, PauliOperator):
            other = PauliOperator.identity(self.n_qubits, other)
        self._check(other)
        return PauliOperator(
            self.n_qubits,
            np.concatenate([self.x, other.x]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    __radd__ = __add__

    def __neg__(self):
        return PauliOperator(self.n_qubits, self.x, self.z, -self.coeffs, simplify=False)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PauliOperator):
            return multiply(self, other)
        return PauliOperator(self.n_qubits, self.x, self.z, self.coeffs * other)

    def __rmul__(self, other):
        return PauliOperator(self.n_qubits, self.x, self.z, self.coeffs * other)

    def __truediv__(self, other):
        return self * (1.0 / other)

    __matmul__ = __mul__

    def adjoint(self):
        # every Pauli string is Hermitian
        return PauliOperator(self.n_qubits, self.x, self.z, self.coeffs.conj(), simplify=False)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) < tol))

    def equals(self, other, tol: float = 1e-12) -> bool:
        return (self - other).is_zero() or bool(np.all(np.abs((self - other).coeffs) < tol))

    def __eq__(self, other):
        if not isinstance(other, PauliOperator) or self.n_qubits != other.n_qubits:
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None


def multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Operator product ``a b`` with exact Pauli phases."""
    a._check(b)
    if a.is_zero() or b.is_zero():
        return PauliOperator.zero(a.n_qubits)
    xa, za, ca = a.x[:, None], a.z[:, None], a.coeffs[:, None]
    xb, zb, cb = b.x[None, :], b.z[None, :], b.coeffs[None, :]
    x = xa ^ xb
    z = za ^ zb
    k = (_popcount(xa & za) + _popcount(xb & zb) + 2 * _popcount(za & xb) - _popcount(x & z)) % 4
    phase = np.array([1, 1j, -1, -1j])[k]
    return PauliOperator(a.n_qubits, x.ravel(), z.ravel(), (ca * cb * phase).ravel())


def commutator(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    return multiply(a, b) - multiply(b, a)


def double_commutator(a: PauliOperator, b: PauliOperator, c: PauliOperator) -> PauliOperator:
    """``{[[a, b], c] + [a, [b, c]]} / 2``."""
    return (commutator(commutator(a, b), c) + commutator(a, commutator(b, c))) * 0.5


# ---------------------------------------------------------------------------
# fermions


@dataclass(frozen=True)
class FermionOperator:
    """Sum of products of ladder operators.

    ``terms`` maps a tuple of ``(mode, dagger)`` factors, applied right to
    left as written, to a complex coefficient.  The empty tuple is the
    identity.
    """

    terms: Mapping[tuple[tuple[int, bool], ...], complex]

    @classmethod
    def from_terms(cls, items: Iterable[tuple[tuple[tuple[int, bool], ...], complex]]):
        acc: dict = defaultdict(complex)
        for factors, c in items:
            acc[tuple((int(p), bool(d)) for p, d in factors)] += c
        return cls({k: v for k, v in acc.items() if abs(v) > PRUNE_TOL})

    @classmethod
    def ladder(cls, mode: int, dagger: bool, coeff: complex = 1.0):
        return cls({((mode, dagger),): coeff})

    @classmethod
    def excitation(cls, created: Iterable[int], annihilated: Iterable[int], coeff: complex = 1.0):
        """``a_c1^ a_c2^ ... a_aK ... a_a1`` for created (c1, c2, ...) and annihilated (a1, a2, ...)."""
        factors = tuple((p, True) for p in created) + tuple((p, False) for p in reversed(tuple(annihilated)))
        return cls({factors: coeff})

    def __add__(self, other):
        return FermionOperator.from_terms(list(self.terms.items()) + list(other.terms.items()))

    def __mul__(self, other):
        if isinstance(other, FermionOperator):
            return FermionOperator.from_terms(
                (fa + fb, ca * cb) for fa, ca in self.terms.items() for fb, cb in other.terms.items()
            )
        return FermionOperator.from_terms((f, c * other) for f, c in self.terms.items())

    __rmul__ = __mul__

    def adjoint(self):
        return FermionOperator.from_terms(
            (tuple((p, not d) for p, d in reversed(f)), np.conj(c)) for f, c in self.terms.items()
        )

    def max_mode(self) -> int:
        return max((p for f in self.terms for p, _ in f), default=-1)


@lru_cache(maxsize=None)
def _jw_ladder(mode: int, dagger: bool, n_qubits: int) -> PauliOperator:
    tail = (1 << mode) - 1
    x = 1 << mode
    # a^dag = Z..Z (X - iY)/2, a = Z..Z (X + iY)/2 with Y = i X Z
    sign = -1 if dagger else 1
    return PauliOperator(n_qubits, [x, x], [tail, tail | x], [0.5, 0.5 * sign * 1j])


def jordan_wigner(op: FermionOperator, n_qubits: int) -> PauliOperator:
    """Map a fermionic operator onto qubits with the Jordan-Wigner encoding."""
    if op.max_mode() >= n_qubits:
        raise IndexOutOfRange(f"mode {op.max_mode()} does not fit in {n_qubits} qubits")
    xs, zs, cs = [], [], []
    for factors, coeff in op.terms.items():
        term = PauliOperator.identity(n_qubits, coeff)
        for mode, dagger in factors:
            term = multiply(term, _jw_ladder(mode, dagger, n_qubits))
        xs.append(term.x)
        zs.append(term.z)
        cs.append(term.coeffs)
    if not xs:
        return PauliOperator.zero(n_qubits)
    return PauliOperator(n_qubits, np.concatenate(xs), np.concatenate(zs), np.concatenate(cs))


def number_operator(n_qubits: int, modes: Iterable[int] | None = None) -> PauliOperator:
    modes = range(n_qubits) if modes is None else modes
    return jordan_wigner(
        FermionOperator.from_terms(((((p, True), (p, False)), 1.0) for p in modes)), n_qubits
    )


def build_hamiltonian(integrals) -> FermionOperator:
    """Second-quantized molecular Hamiltonian over blocked spin orbitals.

    H = E_core + sum h_pq a_p^ a_q + 1/2 sum (pq|rs) a_p^ a_r^ a_s a_q,
    the two-body sum running over spin orbitals with p,q sharing one spin
    and r,s sharing one spin.
    """
    n = integrals.n_spatial_orbitals
    h1 = integrals.one_body_array()
    h2 = integrals.two_body_array()
    items = []
    if integrals.core_energy != 0.0:
        items.append(((), integrals.core_energy))
    for p, q in zip(*np.nonzero(np.abs(h1) > PRUNE_TOL)):
        for s in (0, 1):
            items.append((((spin_orbital(p, s, n), True), (spin_orbital(q, s, n), False)), h1[p, q]))
    for p, q, r, s in zip(*np.nonzero(np.abs(h2) > PRUNE_TOL)):
        val = 0.5 * h2[p, q, r, s]
        for sig in (0, 1):
            for tau in (0, 1):
                P, Q = spin_orbital(p, sig, n), spin_orbital(q, sig, n)
                R, S = spin_orbital(r, tau, n), spin_orbital(s, tau, n)
                if P == R or Q == S:
                    continue
                items.append((((P, True), (R, True), (S, False), (Q, False)), val))
    return FermionOperator.from_terms(items)
