"""Symbolic n-qubit Pauli strings with exact phase tracking.

A :class:`PauliString` is ``i**phase * P_0 (x) P_1 (x) ... (x) P_{n-1}`` with each
``P_k`` in ``{I, X, Y, Z}``.  Phases are integers mod 4, never floats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterable

import numpy as np

from .statevector import I2, X, Y, Z, StateVector, apply_gates

LETTERS = "IXYZ"
_MATRICES = {"I": I2, "X": X, "Y": Y, "Z": Z}

# (a, b) -> (phase exponent, letter) with a.b = i**phase * letter
_PRODUCT = {}
for _a in LETTERS:
    _PRODUCT[("I", _a)] = (0, _a)
    _PRODUCT[(_a, "I")] = (0, _a)
    _PRODUCT[(_a, _a)] = (0, "I")
for _a, _b, _c in ("XYZ", "YZX", "ZXY"):
    _PRODUCT[(_a, _b)] = (1, _c)
    _PRODUCT[(_b, _a)] = (3, _c)

_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PARSE = re.compile(r"^\s*([+-]?)(i?)([IXYZ]*)\s*$")


@dataclass(frozen=True)
class PauliString:
    letters: str
    phase: int = 0

    def __post_init__(self):
        letters = self.letters.upper()
        bad = set(letters) - set(LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, position: int, letter: str) -> "PauliString":
        if not 0 <= position < n:
            raise IndexError(f"position {position} out of range for {n} qubits")
        return cls("I" * position + letter + "I" * (n - position - 1))

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse ``"+iXZY"``, ``"-Y"``, ``"XX"``; a lowercase ``i`` is the imaginary unit."""
        m = _PARSE.match(text)
        if not m:
            raise ValueError(f"cannot parse Pauli string {text!r}")
        sign, imag, letters = m.groups()
        return cls(letters, (2 if sign == "-" else 0) + (1 if imag else 0))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase] + self.letters

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    @property
    def coefficient(self) -> complex:
        return 1j**self.phase

    def is_identity(self, ignore_phase: bool = True) -> bool:
        return self.weight == 0 and (ignore_phase or self.phase == 0)

    def with_phase(self, phase: int) -> "PauliString":
        return PauliString(self.letters, phase)

    def adjoint(self) -> "PauliString":
        # letters are Hermitian, so only the phase conjugates
        return PauliString(self.letters, -self.phase)

    def equal_up_to_phase(self, other: "PauliString") -> bool:
        return self.letters == other.letters

    def commutes_with(self, other: "PauliString") -> bool:
        return commutation_sign(self, other) == 1

    def to_matrix(self) -> np.ndarray:
        m = np.ones((1, 1), dtype=complex)
        for c in self.letters:
            m = np.kron(m, _MATRICES[c])
        return self.coefficient * m

    def to_gates(self) -> tuple[list[np.ndarray], complex]:
        return to_gates(self)

    def apply(self, state: StateVector) -> StateVector:
        if state.num_qubits != len(self):
            raise ValueError(f"{len(self)}-qubit Pauli applied to {state.num_qubits}-qubit state")
        gates, phase = to_gates(self)
        return apply_gates(state, gates, phase)

    def conjugate_by_hadamard(self, positions: Iterable[int] | None = None) -> "PauliString":
        return conjugate_by_hadamard(self, positions)

    def restricted(self, positions: Iterable[int]) -> "PauliString":
        """Identity outside ``positions`` (phase is dropped)."""
        keep = set(positions)
        return PauliString("".join(c if k in keep else "I" for k, c in enumerate(self.letters)))


def _check_lengths(p: PauliString, q: PauliString) -> None:
    if len(p) != len(q):
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p . q`` (q acts first)."""
    _check_lengths(p, q)
    phase = p.phase + q.phase
    letters = []
    for a, b in zip(p.letters, q.letters):
        k, c = _PRODUCT[a, b]
        phase += k
        letters.append(c)
    return PauliString("".join(letters), phase)


def commutation_sign(p: PauliString, q: PauliString) -> int:
    """+1 if ``pq == qp``, -1 if ``pq == -qp``."""
    _check_lengths(p, q)
    anti = sum(a != "I" and b != "I" and a != b for a, b in zip(p.letters, q.letters))
    return -1 if anti % 2 else 1


def conjugate_by_hadamard(p: PauliString, positions: Iterable[int] | None = None) -> PauliString:
    """``H p H`` on the chosen positions (all positions by default)."""
    n = len(p)
    positions = range(n) if positions is None else list(positions)
    letters = list(p.letters)
    phase = p.phase
    for k in positions:
        if not 0 <= k < n:
            raise IndexError(f"position {k} out of range for {n} qubits")
        c = letters[k]
        if c == "X":
            letters[k] = "Z"
        elif c == "Z":
            letters[k] = "X"
        elif c == "Y":
            phase += 2
    return PauliString("".join(letters), phase)


def to_gates(p: PauliString) -> tuple[list[np.ndarray], complex]:
    """Per-qubit 2x2 matrices plus the global phase ``i**phase``."""
    return [_MATRICES[c] for c in p.letters], p.coefficient


def pauli_power(letter: str, exponent: int, n: int = 1, position: int = 0) -> PauliString:
    """``letter**exponent`` placed at ``position`` of an ``n``-qubit string."""
    return PauliString.single(n, position, letter if exponent % 2 else "I")


def all_pauli_strings(n: int) -> list[PauliString]:
    return [PauliString("".join(t)) for t in product(LETTERS, repeat=n)]
