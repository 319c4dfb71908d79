"""Dense statevector simulation for small registers.

Qubit 0 is the most significant bit of the amplitude index, so the two-qubit
basis order is |00>, |01>, |10>, |11>.  Measured qubits are removed from the
returned state.  Every function returns a new state; inputs are never mutated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
MAX_QUBITS = 16

SQRT1_2 = 1 / np.sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=complex)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)

NAMED_GATES = {"I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "S": S, "T": T}


class NormalizationError(ValueError):
    pass


class BellOutcome(enum.IntEnum):
    """Bell measurement result.

    The value packs two bits: the high bit (``bit0``) separates Phi from Psi,
    the low bit (``bit1``) separates + from -.
    """

    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    @property
    def bit0(self) -> int:
        return self.value >> 1

    @property
    def bit1(self) -> int:
        return self.value & 1

    @property
    def bits(self) -> tuple[int, int]:
        return self.bit0, self.bit1

    @classmethod
    def from_bits(cls, bit0: int, bit1: int) -> "BellOutcome":
        return cls((int(bit0) << 1) | int(bit1))

    @property
    def symbol(self) -> str:
        return ("Phi+", "Phi-", "Psi+", "Psi-")[self.value]


# Rows are <Phi+|, <Phi-|, <Psi+|, <Psi-| in the |q1 q2> basis (real, so bra == ket).
BELL_BRAS = SQRT1_2 * np.array(
    [
        [1, 0, 0, 1],
        [1, 0, 0, -1],
        [0, 1, 1, 0],
        [0, 1, -1, 0],
    ],
    dtype=complex,
)

# Rows are <+|, <-|.
X_BRAS = SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of ``num_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        dim = amps.size
        if dim == 0 or dim & (dim - 1):
            raise ValueError(f"amplitude count {dim} is not a power of two")
        if dim > 2**MAX_QUBITS:
            raise ValueError(f"state exceeds {MAX_QUBITS} qubits")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > DEFAULT_TOL:
            raise NormalizationError(f"state norm^2 is {norm:.12g}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __len__(self) -> int:
        return self.num_qubits

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits}, amplitudes={np.round(self.amplitudes, 6)!r})"

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def scaled(self, phase: complex) -> "StateVector":
        return StateVector(self.amplitudes * phase)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def _normalized(amps: np.ndarray) -> StateVector:
    return StateVector(amps / np.sqrt(np.vdot(amps, amps).real))


def basis_state(bits: Sequence[int]) -> StateVector:
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int("".join(str(int(b)) for b in bits) or "0", 2)] = 1
    return StateVector(amps)


def make_product_state(qubit_states: Iterable[tuple[complex, complex]]) -> StateVector:
    """Tensor product of single-qubit states given as ``(a, b)`` = a|0> + b|1>."""
    amps = np.ones(1, dtype=complex)
    for k, (a, b) in enumerate(qubit_states):
        norm = abs(a) ** 2 + abs(b) ** 2
        if abs(norm - 1.0) > DEFAULT_TOL:
            raise NormalizationError(f"qubit {k}: |a|^2 + |b|^2 = {norm:.12g}, expected 1")
        amps = np.outer(amps, np.array([a, b], dtype=complex)).ravel()
    return StateVector(amps)


def make_ghz() -> StateVector:
    """(|000> + |111>)/sqrt(2)."""
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = SQRT1_2
    return StateVector(amps)


def tensor(*states: StateVector) -> StateVector:
    amps = np.ones(1, dtype=complex)
    for s in states:
        amps = np.outer(amps, s.amplitudes).ravel()
    return StateVector(amps)


def check_gate(gate, tol: float = 1e-12) -> np.ndarray:
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise ValueError(f"single-qubit gate must be 2x2, got {gate.shape}")
    if np.abs(gate.conj().T @ gate - I2).max() > tol:
        raise ValueError("gate is not unitary")
    return gate


def _check_index(state: StateVector, q: int) -> None:
    if not 0 <= q < state.num_qubits:
        raise IndexError(f"qubit index {q} out of range for {state.num_qubits}-qubit state")


def apply_gate(state: StateVector, gate, target: int) -> StateVector:
    """Apply a single-qubit unitary to qubit ``target``."""
    gate = check_gate(gate)
    _check_index(state, target)
    psi = state.amplitudes.reshape(2**target, 2, -1)
    return StateVector(np.einsum("ij,ajb->aib", gate, psi).ravel())


def apply_gates(state: StateVector, gates: Sequence, phase: complex = 1) -> StateVector:
    """Apply ``gates[k]`` to qubit ``k`` for every k, then a global phase."""
    if len(gates) != state.num_qubits:
        raise ValueError(f"{len(gates)} gates for {state.num_qubits} qubits")
    for q, g in enumerate(gates):
        state = apply_gate(state, g, q)
    return state.scaled(phase) if phase != 1 else state


def permute_qubits(state: StateVector, perm: Sequence[int]) -> StateVector:
    """Reorder qubits so that new qubit ``j`` is old qubit ``perm[j]``."""
    n = state.num_qubits
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{list(perm)} is not a permutation of {n} qubits")
    psi = state.amplitudes.reshape([2] * n) if n else state.amplitudes
    return StateVector(np.transpose(psi, perm).ravel() if n else psi)


def _measure(state: StateVector, qubits: Sequence[int], bras: np.ndarray, rng) -> tuple[int, StateVector]:
    n = state.num_qubits
    k = len(qubits)
    psi = np.moveaxis(state.amplitudes.reshape([2] * n), list(qubits), list(range(k)))
    branches = bras @ psi.reshape(2**k, -1)
    probs = np.einsum("ij,ij->i", branches.conj(), branches).real
    probs = np.clip(probs, 0, None)
    outcome = int(rng.choice(len(probs), p=probs / probs.sum()))
    return outcome, _normalized(branches[outcome])


def bell_branch_probabilities(state: StateVector, q1: int, q2: int) -> np.ndarray:
    n = state.num_qubits
    psi = np.moveaxis(state.amplitudes.reshape([2] * n), [q1, q2], [0, 1]).reshape(4, -1)
    branches = BELL_BRAS @ psi
    return np.einsum("ij,ij->i", branches.conj(), branches).real


def measure_bell(state: StateVector, q1: int, q2: int, rng) -> tuple[BellOutcome, StateVector]:
    """Bell-basis measurement of qubits ``(q1, q2)``.

    Returns the outcome and the renormalized state of the remaining qubits,
    in their original relative order.
    """
    if q1 == q2:
        raise ValueError("Bell measurement needs two distinct qubits")
    _check_index(state, q1)
    _check_index(state, q2)
    k, rest = _measure(state, (q1, q2), BELL_BRAS, rng)
    return BellOutcome(k), rest


def measure_x(state: StateVector, q: int, rng) -> tuple[int, StateVector]:
    """X-basis measurement: bit 0 for |+>, bit 1 for |->."""
    _check_index(state, q)
    return _measure(state, (q,), X_BRAS, rng)


def inner(a: StateVector, b: StateVector) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clipped to [0, 1]."""
    return min(1.0, abs(inner(a, b)) ** 2)


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = DEFAULT_TOL) -> bool:
    return abs(inner(a, b)) >= 1 - tol


def projective_test(reference: StateVector, state: StateVector, rng) -> bool:
    """Measure ``state`` in a basis containing ``reference``; True on the reference outcome."""
    p = fidelity(reference, state)
    if p > 1 - 1e-12:
        # rounding only; the projection is certain
        return True
    return bool(rng.random() < p)


def swap_pass_probability(a: StateVector, b: StateVector) -> float:
    return (1 + fidelity(a, b)) / 2


def swap_test_joint(joint: StateVector, rng) -> bool:
    """One-shot swap test on a joint state of two equal-size registers.

    Ancilla in |+>, controlled swap of the registers, X-basis measurement of
    the ancilla.  Passes (returns True) on the |+> outcome.
    """
    n = joint.num_qubits
    if n == 0 or n % 2:
        raise ValueError(f"joint state has {n} qubits; need two equal registers")
    half = 2 ** (n // 2)
    psi = joint.amplitudes.reshape(half, half)
    # ancilla |0> branch keeps the registers, |1> branch swaps them
    amps = SQRT1_2 * np.concatenate([psi.ravel(), psi.T.ravel()])
    bit, _ = measure_x(StateVector(amps), 0, rng)
    return bit == 0


def swap_test(a: StateVector, b: StateVector, rng) -> bool:
    """One-shot swap test; passes with probability (1 + |<a|b>|^2) / 2."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return swap_test_joint(tensor(a, b), rng)


def haar_random_qubit(rng) -> tuple[complex, complex]:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return complex(v[0]), complex(v[1])


def haar_random_state(num_qubits: int, rng) -> StateVector:
    dim = 2**num_qubits
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return _normalized(v)
