"""Shared keys, the key-controlled rotation, and quantum one-time encryption.

Key layout (``n`` message qubits, 2 bits per qubit per purpose):

* ``K_AT`` (6n bits): rotation segment, encryption segment, pad for the 2n-bit
  Bell record.
* ``K_BT`` (5n bits): encryption of the clear message, encryption of the
  signature, pad for the n-bit X-basis record.

Segments never overlap, so no key bit is used twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .pauli import PauliString, pauli_power
from .statevector import I2, NAMED_GATES, X, Z, H, StateVector, apply_gate, check_gate

Bits = tuple[int, ...]
BitPair = tuple[int, int]

ALICE_KEY_BITS_PER_QUBIT = 6
BOB_KEY_BITS_PER_QUBIT = 5


class ScheduleError(ValueError):
    """Key or schedule too short for the requested operation."""


def _bits(values) -> Bits:
    out = tuple(int(b) for b in values)
    if any(b not in (0, 1) for b in out):
        raise ValueError("bit strings may only contain 0 and 1")
    return out


@dataclass(frozen=True)
class SecretKey:
    bits: Bits
    owner: str = "AT"

    def __post_init__(self):
        object.__setattr__(self, "bits", _bits(self.bits))
        if self.owner not in ("AT", "BT"):
            raise ValueError(f"owner must be 'AT' or 'BT', got {self.owner!r}")

    @classmethod
    def generate(cls, owner: str, length: int, rng) -> "SecretKey":
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=length)), owner)

    def __len__(self) -> int:
        return len(self.bits)

    def segment(self, start: int, length: int) -> Bits:
        if start + length > len(self.bits):
            raise ScheduleError(f"key {self.owner} has {len(self.bits)} bits, need {start + length}")
        return self.bits[start : start + length]

    def hex(self) -> str:
        """Hex rendering for logs; bits are zero-padded on the right to a nibble."""
        if not self.bits:
            return ""
        padded = self.bits + (0,) * (-len(self.bits) % 4)
        return "".join(f"{int(''.join(map(str, padded[k:k + 4])), 2):x}" for k in range(0, len(padded), 4))


def _pairs(bits: Bits) -> tuple[BitPair, ...]:
    return tuple((bits[2 * k], bits[2 * k + 1]) for k in range(len(bits) // 2))


@dataclass(frozen=True)
class KeySchedule:
    """Per-qubit rotation bits ``(x, z)`` and encryption bits ``(x, z)``."""

    rotation: tuple[BitPair, ...] = ()
    encryption: tuple[BitPair, ...] = ()

    @classmethod
    def from_bits(cls, rotation: Sequence[int] = (), encryption: Sequence[int] = ()) -> "KeySchedule":
        return cls(_pairs(_bits(rotation)), _pairs(_bits(encryption)))

    @classmethod
    def uniform(cls, n: int, rotation: BitPair, encryption: BitPair) -> "KeySchedule":
        return cls((tuple(rotation),) * n, (tuple(encryption),) * n)

    def permuted(self, perm: Sequence[int]) -> "KeySchedule":
        return KeySchedule(tuple(self.rotation[p] for p in perm), tuple(self.encryption[p] for p in perm))


class AliceKeys(NamedTuple):
    schedule: KeySchedule
    record_pad: Bits


class BobKeys(NamedTuple):
    message: KeySchedule
    signature: KeySchedule
    record_pad: Bits


def alice_keys(key: SecretKey, n: int) -> AliceKeys:
    return AliceKeys(
        KeySchedule.from_bits(key.segment(0, 2 * n), key.segment(2 * n, 2 * n)),
        key.segment(4 * n, 2 * n),
    )


def bob_keys(key: SecretKey, n: int) -> BobKeys:
    return BobKeys(
        KeySchedule.from_bits(encryption=key.segment(0, 2 * n)),
        KeySchedule.from_bits(encryption=key.segment(2 * n, 2 * n)),
        key.segment(4 * n, n),
    )


def key_length(owner: str, n: int) -> int:
    return (ALICE_KEY_BITS_PER_QUBIT if owner == "AT" else BOB_KEY_BITS_PER_QUBIT) * n


def _xz(pairs: Sequence[BitPair], n: int, what: str) -> PauliString:
    if len(pairs) < n:
        raise ScheduleError(f"{what} schedule covers {len(pairs)} qubits, need {n}")
    out = PauliString.identity(n)
    for k, (bx, bz) in enumerate(pairs[:n]):
        out = out * pauli_power("X", bx, n, k) * pauli_power("Z", bz, n, k)
    return out


def rotation_op(schedule: KeySchedule, n: int | None = None) -> PauliString:
    """Key rotation: ``X**x_k Z**z_k`` on every qubit k."""
    return _xz(schedule.rotation, len(schedule.rotation) if n is None else n, "rotation")


def encryption_pauli(schedule: KeySchedule, n: int | None = None) -> PauliString:
    """The Pauli part ``X**x_k Z**z_k`` of the one-time encryption."""
    return _xz(schedule.encryption, len(schedule.encryption) if n is None else n, "encryption")


@dataclass(frozen=True, eq=False)
class EncryptionScheme:
    """Per-qubit operator family ``U . P_k . V``; Pauli-type when U = V = I."""

    name: str
    left: np.ndarray = field(default_factory=lambda: I2)
    right: np.ndarray = field(default_factory=lambda: I2)

    def __post_init__(self):
        object.__setattr__(self, "left", check_gate(self.left, tol=1e-9))
        object.__setattr__(self, "right", check_gate(self.right, tol=1e-9))
        ops = {}
        for bx in (0, 1):
            for bz in (0, 1):
                pauli = np.linalg.matrix_power(X, bx) @ np.linalg.matrix_power(Z, bz)
                ops[bx, bz] = self.left @ pauli @ self.right
        object.__setattr__(self, "_operators", ops)

    @property
    def is_pauli_type(self) -> bool:
        return np.allclose(self.left, I2) and np.allclose(self.right, I2)

    def qubit_operator(self, bits: BitPair) -> np.ndarray:
        return self._operators[(int(bits[0]), int(bits[1]))]

    def operator_set(self) -> list[np.ndarray]:
        return [self.qubit_operator((bx, bz)) for bx in (0, 1) for bz in (0, 1)]

    def __repr__(self) -> str:
        return f"EncryptionScheme({self.name!r})"


PAULI = EncryptionScheme("pauli")
IH = EncryptionScheme("ih", I2, H)


def uv_scheme(left: str, right: str) -> EncryptionScheme:
    """(U, V)-type scheme from named gates, e.g. ``uv_scheme("I", "H")``."""
    try:
        return EncryptionScheme(f"uv:{left},{right}", NAMED_GATES[left], NAMED_GATES[right])
    except KeyError as exc:
        raise ValueError(f"unknown gate {exc.args[0]!r}; choose from {sorted(NAMED_GATES)}") from None


def _check_cover(state: StateVector, schedule: KeySchedule) -> None:
    if len(schedule.encryption) < state.num_qubits:
        raise ScheduleError(
            f"encryption schedule covers {len(schedule.encryption)} qubits, state has {state.num_qubits}"
        )


def encrypt(state: StateVector, schedule: KeySchedule, scheme: EncryptionScheme = PAULI) -> StateVector:
    _check_cover(state, schedule)
    for q in range(state.num_qubits):
        state = apply_gate(state, scheme.qubit_operator(schedule.encryption[q]), q)
    return state


def decrypt(state: StateVector, schedule: KeySchedule, scheme: EncryptionScheme = PAULI) -> StateVector:
    _check_cover(state, schedule)
    for q in range(state.num_qubits):
        state = apply_gate(state, scheme.qubit_operator(schedule.encryption[q]).conj().T, q)
    return state


@dataclass
class EncryptionSetCheck:
    valid: bool
    reasons: list[str]
    gram: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.valid


def validate_encryption_set(operators, probabilities, tol: float = 1e-9) -> EncryptionSetCheck:
    """Check that ``{p_k, U_k}`` is an optimal quantum encryption set.

    Valid iff there are d**2 unitaries, all equally likely, whose Hilbert-Schmidt
    Gram matrix ``Tr(U_j^dag U_k)`` equals ``d * identity``.
    """
    ops = [np.asarray(u, dtype=complex) for u in operators]
    probs = np.asarray(probabilities, dtype=float)
    reasons = []
    if len(ops) != len(probs):
        raise ValueError(f"{len(ops)} operators but {len(probs)} probabilities")
    if not ops:
        return EncryptionSetCheck(False, ["empty operator set"])
    d = ops[0].shape[0]
    if any(u.shape != (d, d) for u in ops):
        return EncryptionSetCheck(False, ["operators are not all square of the same dimension"])
    if len(ops) != d * d:
        reasons.append(f"count: {len(ops)} operators, need {d * d} for dimension {d}")
    eye = np.eye(d)
    for k, u in enumerate(ops):
        if not np.allclose(u.conj().T @ u, eye, atol=tol, rtol=0):
            reasons.append(f"operator {k} is not unitary")
    if abs(probs.sum() - 1) > tol:
        reasons.append(f"probabilities sum to {probs.sum():.12g}")
    if np.ptp(probs) > tol:
        reasons.append("probabilities are not all equal")
    stacked = np.stack(ops)
    gram = np.einsum("jab,kab->jk", stacked.conj(), stacked)
    if not np.allclose(gram, d * np.eye(len(ops)), atol=tol, rtol=0):
        reasons.append("Hilbert-Schmidt inner products are not d * delta")
    return EncryptionSetCheck(not reasons, reasons, gram)


def classical_otp(bits: Sequence[int], keystream: Sequence[int]) -> Bits:
    bits, keystream = _bits(bits), _bits(keystream)
    if len(bits) != len(keystream):
        raise ValueError(f"length mismatch: {len(bits)} bits, {len(keystream)} key bits")
    return tuple(b ^ k for b, k in zip(bits, keystream))
