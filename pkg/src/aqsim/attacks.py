"""Forgeries against the signature protocol and the Hadamard-hardened defense.

The forger sits between signing and Bob's transmission to Trent (Bob himself in
the default story).  A forgery *succeeds* when Trent accepts and the message his
decrypted signature vouches for equals the forger's intended message up to a
global phase; acceptance alone is tracked separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .pauli import PauliString
from .protocol import MessageSpec, SessionRecord, SignaturePair, run_session
from .qotp import IH, EncryptionScheme, SecretKey
from .statevector import (
    SQRT1_2,
    H,
    StateVector,
    equal_up_to_global_phase,
    fidelity,
    make_product_state,
    permute_qubits,
    swap_test_joint,
    tensor,
)


@dataclass(frozen=True)
class PauliForgery:
    """Apply ``q`` to the clear message and ``sig_q`` (default ``q``) to the signature."""

    q: PauliString
    sig_q: PauliString | None = None

    def forge(self, pair: SignaturePair) -> SignaturePair:
        return forge_pauli(pair, self.q, self.sig_q)

    def target(self, message: StateVector) -> StateVector:
        return self.q.apply(message)


@dataclass(frozen=True)
class MaExchange:
    targets: tuple[int, ...]
    letter: str = "X"

    def forge(self, pair: SignaturePair) -> SignaturePair:
        return forge_with_ma(pair, self.targets, self.letter)

    def target(self, message: StateVector) -> StateVector:
        n = message.num_qubits
        return PauliString("".join(self.letter if k in self.targets else "I" for k in range(n))).apply(message)


@dataclass(frozen=True)
class Permutation:
    perm: tuple[int, ...]

    def forge(self, pair: SignaturePair) -> SignaturePair:
        return permutation_attack(pair, self.perm)

    def target(self, message: StateVector) -> StateVector:
        return permute_qubits(message, self.perm)


Attack = Union[PauliForgery, MaExchange, Permutation]


@dataclass(frozen=True)
class AttackOutcome:
    accepted: bool
    intended_target: StateVector
    delivered: StateVector
    success: bool
    detection_mode: str
    rotation_test_passed: bool = False
    reconstruction_test_passed: bool | None = None
    analytic_detection: float | None = None

    def to_record(self) -> dict:
        return {
            "accepted": self.accepted,
            "success": self.success,
            "detection_mode": self.detection_mode,
            "delivered_fidelity": round(fidelity(self.intended_target, self.delivered), 12),
            "analytic_detection": None if self.analytic_detection is None else round(self.analytic_detection, 12),
        }


def forge_pauli(pair: SignaturePair, q: PauliString, sig_q: PauliString | None = None) -> SignaturePair:
    """Existential forgery: ``(Q|P>, M_A, Q|S>)`` without any key knowledge."""
    if len(q) != pair.n:
        raise ValueError(f"{len(q)}-qubit Pauli for a {pair.n}-qubit message")
    sig_q = q if sig_q is None else sig_q
    if len(sig_q) != pair.n:
        raise ValueError(f"{len(sig_q)}-qubit signature Pauli for a {pair.n}-qubit message")
    return SignaturePair(q.apply(pair.message), pair.m_a, sig_q.apply(pair.sig))


def forge_with_ma(pair: SignaturePair, targets: Sequence[int], letter: str = "X") -> SignaturePair:
    """Forge the Bell record along with the quantum parts.

    ``letter="X"`` flips the Phi/Psi bit of each targeted entry (Phi+ <-> Psi+,
    Phi- <-> Psi-), which makes Trent's recovery pick up an extra X.  ``"Z"``
    flips the +/- bit instead (Phi+ <-> Phi-, Psi+ <-> Psi-) and adds a Z.
    The record is padded, so flipping ciphertext bits flips plaintext bits.
    """
    if letter not in ("X", "Z"):
        raise ValueError(f"unsupported target letter {letter!r}; use 'X' or 'Z'")
    n = pair.n
    targets = sorted(set(int(t) for t in targets))
    if any(not 0 <= t < n for t in targets):
        raise IndexError(f"targets {targets} out of range for {n} qubits")
    offset = 0 if letter == "X" else 1
    m_a = list(pair.m_a)
    for t in targets:
        m_a[2 * t + offset] ^= 1
    q = PauliString("".join(letter if k in targets else "I" for k in range(n)))
    return SignaturePair(q.apply(pair.message), tuple(m_a), q.apply(pair.sig))


def permutation_attack(pair: SignaturePair, perm: Sequence[int]) -> SignaturePair:
    """Reorder qubits of message, signature and Bell record; keys stay positional."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(pair.n)):
        raise ValueError(f"{list(perm)} is not a permutation of {pair.n} positions")
    m_a = tuple(b for p in perm for b in pair.m_a[2 * p : 2 * p + 2])
    return SignaturePair(permute_qubits(pair.message, perm), m_a, permute_qubits(pair.sig, perm))


def hadamard_all(n: int) -> np.ndarray:
    m = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        m = np.kron(m, H)
    return m


def analytic_detection_probability(message: StateVector, q: PauliString, test_mode: str = "projective") -> float:
    """Trent's rejection probability for ``forge_pauli(q)`` under the (I,H) scheme.

    Computed from dense matrices: with ``Qh = H Q H``, projective detection is
    ``1 - |<P|Qh^dag Q|P>|^2`` and a single swap test catches half of that.
    """
    qm = q.to_matrix()
    hn = hadamard_all(len(q))
    qh = hn @ qm @ hn
    amp = np.vdot(message.amplitudes, qh.conj().T @ qm @ message.amplitudes)
    p = 1 - min(1.0, abs(amp) ** 2)
    return p if test_mode == "projective" else p / 2


def attack_session(
    n: int,
    scheme: EncryptionScheme,
    variant: str,
    test_mode: str,
    attack: Attack,
    rng,
    message_spec: MessageSpec = "random",
    keys: tuple[SecretKey, SecretKey] | None = None,
) -> AttackOutcome:
    record = run_session(n, scheme, variant, test_mode, rng, message_spec, tamper=attack.forge, keys=keys)
    return outcome_from_record(record, attack, scheme, test_mode)


def outcome_from_record(record: SessionRecord, attack: Attack, scheme: EncryptionScheme, test_mode: str) -> AttackOutcome:
    original = record.original.message
    target = attack.target(original)
    delivered = record.verdict.signed_content
    accepted = record.verdict.passed
    analytic = None
    if isinstance(attack, PauliForgery) and attack.sig_q is None and scheme is IH:
        analytic = analytic_detection_probability(original, attack.q, test_mode)
    return AttackOutcome(
        accepted=accepted,
        intended_target=target,
        delivered=delivered,
        success=accepted and equal_up_to_global_phase(delivered, target),
        detection_mode=test_mode,
        rotation_test_passed=record.verdict.rotation_test_passed,
        reconstruction_test_passed=record.verdict.reconstruction_test_passed,
        analytic_detection=analytic,
    )


def defense_trials(
    n: int,
    q: PauliString,
    message_spec: MessageSpec,
    trials: int,
    test_mode: str,
    rng,
    variant: str = "A",
) -> list[tuple[bool, float]]:
    """Per-trial ``(detected, analytic detection probability)`` against the (I,H) scheme."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    out = []
    for _ in range(trials):
        o = attack_session(n, IH, variant, test_mode, PauliForgery(q), rng, message_spec)
        out.append((not o.accepted, o.analytic_detection))
    return out


def defense_detection_rate(
    n: int,
    q: PauliString,
    message_spec: MessageSpec,
    trials: int,
    test_mode: str,
    rng,
) -> float:
    """Fraction of ``forge_pauli(q)`` attempts that Trent rejects under the (I,H) scheme."""
    results = defense_trials(n, q, message_spec, trials, test_mode, rng)
    return sum(d for d, _ in results) / len(results)


def symmetric_joint_state() -> StateVector:
    """(|01> + |10>)/sqrt(2) split as one qubit per register: symmetric but not a product."""
    return StateVector(SQRT1_2 * np.array([0, 1, 1, 0], dtype=complex))


def swap_pass_rate(joint: StateVector, shots: int, rng) -> float:
    return sum(swap_test_joint(joint, rng) for _ in range(shots)) / shots


def symmetric_state_demo(rng, shots: int = 10_000, joint: StateVector | None = None) -> float:
    """Swap-test pass rate of an exchange-symmetric joint state (default: the Psi+ pair)."""
    return swap_pass_rate(symmetric_joint_state() if joint is None else joint, shots, rng)


def product_joint(a: tuple[complex, complex], b: tuple[complex, complex]) -> StateVector:
    return tensor(make_product_state([a]), make_product_state([b]))
