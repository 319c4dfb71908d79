"""Three-party arbitrated signature protocol: Alice signs, Bob relays, Trent arbitrates.

Each message qubit ``i`` has its own GHZ triplet whose particles are ordered
(Alice, Bob, Trent).  After Alice's Bell measurement the session keeps the
(Bob, Trent) pair; after Bob's X measurement only Trent's particle is left.

Equality tests sample their outcome with the exact Born probability but do not
model measurement back-action on the compared states.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .pauli import PauliString
from .qotp import (
    PAULI,
    EncryptionScheme,
    SecretKey,
    alice_keys,
    bob_keys,
    classical_otp,
    decrypt,
    encrypt,
    key_length,
    rotation_op,
)
from .statevector import (
    BellOutcome,
    StateVector,
    equal_up_to_global_phase,
    fidelity,
    haar_random_qubit,
    make_ghz,
    make_product_state,
    measure_bell,
    measure_x,
    projective_test,
    swap_test,
    tensor,
)

VARIANTS = ("A", "B")
TEST_MODES = ("projective", "swap")

MessageSpec = Union[str, Sequence[tuple[complex, complex]]]


class ProtocolError(RuntimeError):
    pass


class Phase(enum.IntEnum):
    DISTRIBUTED = 0
    ALICE_MEASURED = 1
    BOB_MEASURED = 2
    CONSUMED = 3


# Trent's correction, keyed by (Alice's Bell outcome, Bob's X bit), read off the
# branches of |P> (x) |GHZ>:
#   Phi+: |+>(a0+b1) + |->(a0-b1)      Phi-: |+>(a0-b1) + |->(a0+b1)
#   Psi+: |+>(b0+a1) + |->(b0-a1)      Psi-: -[|+>(b0-a1) + |->(b0+a1)]
# Compactly: Z**(bit1 ^ x) . X**bit0, so flipping bit0 adds an X to the recovery.
CORRECTION_TABLE: dict[tuple[BellOutcome, int], PauliString] = {
    (BellOutcome.PHI_PLUS, 0): PauliString("I"),
    (BellOutcome.PHI_PLUS, 1): PauliString("Z"),
    (BellOutcome.PHI_MINUS, 0): PauliString("Z"),
    (BellOutcome.PHI_MINUS, 1): PauliString("I"),
    (BellOutcome.PSI_PLUS, 0): PauliString("X"),
    (BellOutcome.PSI_PLUS, 1): PauliString.parse("+iY"),  # Z.X
    (BellOutcome.PSI_MINUS, 0): PauliString.parse("+iY"),
    (BellOutcome.PSI_MINUS, 1): PauliString("X"),
}


def outcomes_to_bits(outcomes: Sequence[BellOutcome]) -> tuple[int, ...]:
    return tuple(b for o in outcomes for b in o.bits)


def bits_to_outcomes(bits: Sequence[int]) -> tuple[BellOutcome, ...]:
    if len(bits) % 2:
        raise ValueError("Bell record must have an even number of bits")
    return tuple(BellOutcome.from_bits(bits[k], bits[k + 1]) for k in range(0, len(bits), 2))


class Transcript:
    """Ordered event log, exported as JSON lines."""

    def __init__(self):
        self.events: list[dict] = []

    def record(self, event: str, **fields) -> None:
        self.events.append({"seq": len(self.events), "event": event, **fields})

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)


class GhzSession:
    """GHZ particles for one signature, with a monotone lifecycle."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("a session needs at least one qubit")
        self.n = n
        self.particles: list[StateVector] = [make_ghz() for _ in range(n)]
        self.phase = Phase.DISTRIBUTED
        self.transcript = Transcript()

    def require(self, phase: Phase, step: str) -> None:
        if self.phase != phase:
            raise ProtocolError(f"{step}: session is {self.phase.name}, expected {phase.name}")

    def advance(self, phase: Phase) -> None:
        if phase <= self.phase:
            raise ProtocolError(f"cannot move session from {self.phase.name} to {phase.name}")
        self.phase = phase
        self.transcript.record("phase", phase=phase.name)


@dataclass(frozen=True)
class SignaturePair:
    """What Alice sends Bob.

    ``m_a`` is Alice's Bell record as 2n bits, already one-time padded under
    ``K_AT``; Bob cannot read it but can flip its bits.
    """

    message: StateVector
    m_a: tuple[int, ...]
    sig: StateVector

    def __post_init__(self):
        if self.message.num_qubits != self.sig.num_qubits:
            raise ValueError("message and signature must have the same qubit count")
        if len(self.m_a) != 2 * self.message.num_qubits:
            raise ValueError(f"Bell record has {len(self.m_a)} bits, need {2 * self.message.num_qubits}")

    @property
    def n(self) -> int:
        return self.message.num_qubits


@dataclass(frozen=True)
class TransmissionBundle:
    """What Bob forwards to Trent; every field is encrypted."""

    m_b: tuple[int, ...]
    message: StateVector
    sig: StateVector
    m_a: tuple[int, ...]


@dataclass(frozen=True)
class ReturnedMaterials:
    message: StateVector
    m_a: tuple[BellOutcome, ...]
    m_b: tuple[int, ...]
    particles: tuple[StateVector, ...]


@dataclass(frozen=True)
class TrentVerdict:
    passed: bool
    rotation_test_passed: bool
    reconstruction_test_passed: bool | None
    materials: ReturnedMaterials
    # R^dag applied to the decrypted signature: the message the signature vouches for
    signed_content: StateVector
    reconstruction: StateVector | None = None


@dataclass(frozen=True)
class VerificationResult:
    accepted: bool
    trent_test_passed: bool
    bob_test_passed: bool
    recovered_fidelity: float
    recovered: StateVector | None = None


def resolve_message(message_spec: MessageSpec, n: int, rng) -> list[tuple[complex, complex]]:
    """Per-qubit preparations for ``"random"``, ``"zero"``, ``"plus"`` or an explicit list."""
    if isinstance(message_spec, str):
        if message_spec == "random":
            return [haar_random_qubit(rng) for _ in range(n)]
        if message_spec == "zero":
            return [(1, 0)] * n
        if message_spec == "plus":
            return [(2**-0.5, 2**-0.5)] * n
        raise ValueError(f"unknown message spec {message_spec!r}")
    pairs = [(complex(a), complex(b)) for a, b in message_spec]
    if len(pairs) != n:
        raise ValueError(f"message has {len(pairs)} qubits, session has {n}")
    return pairs


def initialize(n: int, rng) -> tuple[SecretKey, SecretKey, GhzSession]:
    k_at = SecretKey.generate("AT", key_length("AT", n), rng)
    k_bt = SecretKey.generate("BT", key_length("BT", n), rng)
    session = GhzSession(n)
    session.transcript.record("init", n=n, k_at=k_at.hex(), k_bt=k_bt.hex())
    return k_at, k_bt, session


def equality_test(reference: StateVector, state: StateVector, test_mode: str, rng) -> bool:
    if test_mode == "projective":
        return projective_test(reference, state, rng)
    if test_mode == "swap":
        return swap_test(reference, state, rng)
    raise ValueError(f"unknown test mode {test_mode!r}")


def reconstruct(particles: Sequence[StateVector], outcomes: Sequence[BellOutcome], m_b: Sequence[int]) -> StateVector:
    """Apply the correction table to Trent's particles and tensor the results."""
    if not (len(particles) == len(outcomes) == len(m_b)):
        raise ValueError("particles, Bell record and X record must have equal length")
    fixed = []
    for particle, outcome, x in zip(particles, outcomes, m_b):
        if particle.num_qubits != 1:
            raise ProtocolError("Trent's particle must be a single qubit before reconstruction")
        fixed.append(CORRECTION_TABLE[outcome, int(x)].apply(particle))
    return tensor(*fixed)


def sign(
    message_spec: MessageSpec,
    k_at: SecretKey,
    session: GhzSession,
    scheme: EncryptionScheme,
    rng,
) -> SignaturePair:
    session.require(Phase.DISTRIBUTED, "sign")
    n = session.n
    keys = alice_keys(k_at, n)
    pairs = resolve_message(message_spec, n, rng)

    # Alice knows the preparation, so each copy is prepared afresh.
    message = make_product_state(pairs)
    rotated = rotation_op(keys.schedule, n).apply(make_product_state(pairs))

    outcomes = []
    for i, pair in enumerate(pairs):
        joint = tensor(make_product_state([pair]), session.particles[i])
        outcome, rest = measure_bell(joint, 0, 1, rng)
        outcomes.append(outcome)
        session.particles[i] = rest
    m_a = classical_otp(outcomes_to_bits(outcomes), keys.record_pad)
    sig = encrypt(rotated, keys.schedule, scheme)

    session.transcript.record("sign", scheme=scheme.name, m_a=[o.symbol for o in outcomes])
    session.advance(Phase.ALICE_MEASURED)
    return SignaturePair(message, m_a, sig)


def bob_prepare(pair: SignaturePair, k_bt: SecretKey, session: GhzSession, rng) -> TransmissionBundle:
    session.require(Phase.ALICE_MEASURED, "bob_prepare")
    if pair.n != session.n:
        raise ProtocolError(f"pair has {pair.n} qubits, session has {session.n}")
    keys = bob_keys(k_bt, session.n)
    m_b = []
    for i in range(session.n):
        bit, rest = measure_x(session.particles[i], 0, rng)
        m_b.append(bit)
        session.particles[i] = rest
    bundle = TransmissionBundle(
        m_b=classical_otp(m_b, keys.record_pad),
        message=encrypt(pair.message, keys.message, PAULI),
        sig=encrypt(pair.sig, keys.signature, PAULI),
        m_a=pair.m_a,
    )
    session.transcript.record("bob_prepare", m_b=m_b)
    session.advance(Phase.BOB_MEASURED)
    return bundle


def trent_verify(
    bundle: TransmissionBundle,
    k_at: SecretKey,
    k_bt: SecretKey,
    session: GhzSession,
    scheme: EncryptionScheme,
    variant: str,
    test_mode: str,
    rng,
) -> TrentVerdict:
    """Decrypt Bob's bundle and test the signature.

    Variant ``"A"`` only checks ``R|P> == decrypted |R>``.  Variant ``"B"`` also
    rebuilds the message from Trent's GHZ particles and compares it with the
    received one.
    """
    session.require(Phase.BOB_MEASURED, "trent_verify")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n = session.n
    if bundle.message.num_qubits != n or len(bundle.m_b) != n or len(bundle.m_a) != 2 * n:
        raise ProtocolError("malformed bundle: sizes do not match the session")

    a_keys, b_keys = alice_keys(k_at, n), bob_keys(k_bt, n)
    message = decrypt(bundle.message, b_keys.message, PAULI)
    sig = decrypt(bundle.sig, b_keys.signature, PAULI)
    m_b = classical_otp(bundle.m_b, b_keys.record_pad)
    outcomes = bits_to_outcomes(classical_otp(bundle.m_a, a_keys.record_pad))

    rotation = rotation_op(a_keys.schedule, n)
    r_prime = decrypt(sig, a_keys.schedule, scheme)
    rotation_ok = equality_test(rotation.apply(message), r_prime, test_mode, rng)

    recon = None
    recon_ok = None
    if variant == "B":
        recon = reconstruct(session.particles, outcomes, m_b)
        recon_ok = equality_test(message, recon, test_mode, rng)

    passed = rotation_ok and recon_ok is not False
    materials = ReturnedMaterials(message, outcomes, m_b, tuple(session.particles))
    session.transcript.record(
        "trent_verify",
        variant=variant,
        test_mode=test_mode,
        rotation_test=rotation_ok,
        reconstruction_test=recon_ok,
        passed=passed,
    )
    session.advance(Phase.CONSUMED)
    return TrentVerdict(
        passed=passed,
        rotation_test_passed=rotation_ok,
        reconstruction_test_passed=recon_ok,
        materials=materials,
        signed_content=rotation.adjoint().apply(r_prime),
        reconstruction=recon,
    )


def bob_recover(
    verdict: TrentVerdict,
    session: GhzSession,
    test_mode: str,
    rng,
    reference: StateVector | None = None,
) -> VerificationResult:
    """Bob's final step: correct Trent's particles and compare with the received message.

    ``reference`` is the state the recovered fidelity is reported against; it
    defaults to the message Trent returned.
    """
    if not verdict.passed:
        raise ProtocolError("bob_recover called after Trent rejected the signature")
    session.require(Phase.CONSUMED, "bob_recover")
    mats = verdict.materials
    recovered = reconstruct(mats.particles, mats.m_a, mats.m_b)
    bob_ok = equality_test(mats.message, recovered, test_mode, rng)
    ref = mats.message if reference is None else reference
    fid = fidelity(ref, recovered)
    session.transcript.record("bob_recover", passed=bob_ok, fidelity=round(fid, 12))
    return VerificationResult(
        accepted=verdict.passed and bob_ok,
        trent_test_passed=verdict.passed,
        bob_test_passed=bob_ok,
        recovered_fidelity=fid,
        recovered=recovered,
    )


@dataclass
class SessionRecord:
    """Everything produced by one pass through the protocol."""

    k_at: SecretKey
    k_bt: SecretKey
    session: GhzSession
    original: SignaturePair
    delivered_pair: SignaturePair
    verdict: TrentVerdict
    result: VerificationResult


def run_session(
    n: int,
    scheme: EncryptionScheme,
    variant: str,
    test_mode: str,
    rng,
    message_spec: MessageSpec = "random",
    tamper: Callable[[SignaturePair], SignaturePair] | None = None,
    keys: tuple[SecretKey, SecretKey] | None = None,
) -> SessionRecord:
    """Setup through Bob's final check; ``tamper`` acts on the pair after Alice signs, before Bob forwards it."""
    if test_mode not in TEST_MODES:
        raise ValueError(f"unknown test mode {test_mode!r}")
    k_at, k_bt, session = initialize(n, rng)
    if keys is not None:
        k_at, k_bt = keys
    pair = sign(message_spec, k_at, session, scheme, rng)
    delivered = tamper(pair) if tamper else pair
    bundle = bob_prepare(delivered, k_bt, session, rng)
    verdict = trent_verify(bundle, k_at, k_bt, session, scheme, variant, test_mode, rng)
    if verdict.passed:
        result = bob_recover(verdict, session, test_mode, rng, reference=pair.message)
    else:
        result = VerificationResult(False, False, False, 0.0)
    return SessionRecord(k_at, k_bt, session, pair, delivered, verdict, result)


def run_honest_session(
    n: int,
    scheme: EncryptionScheme,
    variant: str,
    test_mode: str,
    rng,
    message_spec: MessageSpec = "random",
) -> VerificationResult:
    return run_session(n, scheme, variant, test_mode, rng, message_spec).result


def honest_recovery_exact(record: SessionRecord, tol: float = 1e-9) -> bool:
    rec = record.result.recovered
    return rec is not None and equal_up_to_global_phase(rec, record.original.message, tol)
