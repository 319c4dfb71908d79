import itertools
import json
from dataclasses import replace

import numpy as np
import pytest

from aqsim.pauli import PauliString
from aqsim.protocol import (
    CORRECTION_TABLE,
    Phase,
    ProtocolError,
    SignaturePair,
    bits_to_outcomes,
    bob_prepare,
    bob_recover,
    initialize,
    outcomes_to_bits,
    reconstruct,
    run_honest_session,
    run_session,
    sign,
    trent_verify,
)
from aqsim.qotp import IH, PAULI, SecretKey, alice_keys, bob_keys, classical_otp, decrypt
from aqsim.statevector import (
    SQRT1_2,
    BellOutcome,
    StateVector,
    equal_up_to_global_phase,
    haar_random_qubit,
    make_ghz,
    make_product_state,
    measure_bell,
    tensor,
)

from conftest import within_3_sigma

PLUS = np.array([1, 1]) * SQRT1_2
MINUS = np.array([1, -1]) * SQRT1_2
PAULI_M = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}


def analytic_branches(a, b):
    """Residual (Bob, Trent) state for each Bell outcome, straight from the expansion of |P>|GHZ>."""
    k0, k1 = np.array([1, 0]), np.array([0, 1])
    return {
        BellOutcome.PHI_PLUS: (np.kron(PLUS, a * k0 + b * k1) + np.kron(MINUS, a * k0 - b * k1)) * SQRT1_2,
        BellOutcome.PHI_MINUS: (np.kron(PLUS, a * k0 - b * k1) + np.kron(MINUS, a * k0 + b * k1)) * SQRT1_2,
        BellOutcome.PSI_PLUS: (np.kron(PLUS, b * k0 + a * k1) + np.kron(MINUS, b * k0 - a * k1)) * SQRT1_2,
        BellOutcome.PSI_MINUS: -(np.kron(PLUS, b * k0 - a * k1) + np.kron(MINUS, b * k0 + a * k1)) * SQRT1_2,
    }


def trent_state(residual, x_bit):
    """Trent's particle after Bob's X outcome, by direct projection."""
    bra = PLUS if x_bit == 0 else MINUS
    v = bra @ residual.reshape(2, 2)
    return v / np.linalg.norm(v)


def brute_force_correction(outcome, x_bit, rng):
    """The unique Pauli letter that maps Trent's particle back to |P> for random messages."""
    found = set()
    for letter, m in PAULI_M.items():
        ok = True
        for _ in range(5):
            a, b = haar_random_qubit(rng)
            t = trent_state(analytic_branches(a, b)[outcome], x_bit)
            if abs(np.vdot([a, b], m @ t)) < 1 - 1e-9:
                ok = False
                break
        if ok:
            found.add(letter)
    assert len(found) == 1
    return found.pop()


class TestEq1:
    def test_branch_residuals_match_simulation(self, rng):
        for _ in range(30):
            a, b = haar_random_qubit(rng)
            joint = tensor(make_product_state([(a, b)]), make_ghz())
            expected = analytic_branches(a, b)
            seen = set()
            while len(seen) < 4:
                outcome, rest = measure_bell(joint, 0, 1, rng)
                seen.add(outcome)
                assert np.allclose(rest.amplitudes, expected[outcome], atol=1e-12)

    def test_correction_table_matches_brute_force(self, rng):
        for (outcome, x), corr in CORRECTION_TABLE.items():
            assert corr.letters == brute_force_correction(outcome, x, rng)

    def test_correction_table_covers_all_branches(self):
        assert set(CORRECTION_TABLE) == set(itertools.product(BellOutcome, (0, 1)))

    def test_correction_reproduces_message(self, rng):
        for _ in range(20):
            a, b = haar_random_qubit(rng)
            for (outcome, x), corr in CORRECTION_TABLE.items():
                t = StateVector(trent_state(analytic_branches(a, b)[outcome], x))
                assert equal_up_to_global_phase(corr.apply(t), make_product_state([(a, b)]))


class TestRecordCoding:
    def test_round_trip(self):
        outs = (BellOutcome.PSI_MINUS, BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS)
        assert outcomes_to_bits(outs) == (1, 1, 0, 0, 0, 1)
        assert bits_to_outcomes(outcomes_to_bits(outs)) == outs

    def test_odd_length(self):
        with pytest.raises(ValueError):
            bits_to_outcomes((1, 0, 1))


class TestLifecycle:
    def test_initialize(self, rng):
        k_at, k_bt, session = initialize(1, rng)
        assert session.phase is Phase.DISTRIBUTED
        assert np.allclose(session.particles[0].amplitudes, make_ghz().amplitudes)
        assert len(k_at) == 6 and len(k_bt) == 5

    def test_zero_qubits_rejected(self, rng):
        with pytest.raises(ValueError):
            initialize(0, rng)

    def test_zero_key_signature_is_message(self, rng):
        _, _, session = initialize(1, rng)
        pair = sign([(1, 0)], SecretKey((0,) * 6, "AT"), session, PAULI, rng)
        assert np.allclose(pair.sig.amplitudes, [1, 0])
        assert np.allclose(pair.message.amplitudes, [1, 0])

    def test_sign_twice_rejected(self, rng):
        k_at, _, session = initialize(2, rng)
        sign("random", k_at, session, PAULI, rng)
        with pytest.raises(ProtocolError):
            sign("random", k_at, session, PAULI, rng)

    def test_phases_advance(self, rng):
        k_at, k_bt, session = initialize(2, rng)
        pair = sign("random", k_at, session, PAULI, rng)
        assert session.phase is Phase.ALICE_MEASURED
        bundle = bob_prepare(pair, k_bt, session, rng)
        assert session.phase is Phase.BOB_MEASURED
        with pytest.raises(ProtocolError):
            bob_prepare(pair, k_bt, session, rng)
        verdict = trent_verify(bundle, k_at, k_bt, session, PAULI, "A", "projective", rng)
        assert session.phase is Phase.CONSUMED
        with pytest.raises(ProtocolError):
            trent_verify(bundle, k_at, k_bt, session, PAULI, "A", "projective", rng)
        assert bob_recover(verdict, session, "projective", rng).accepted

    def test_bob_recover_after_reject(self, rng):
        k_at, k_bt, session = initialize(1, rng)
        pair = sign([(1, 0)], k_at, session, PAULI, rng)
        forged = SignaturePair(make_product_state([(0, 1)]), pair.m_a, pair.sig)
        bundle = bob_prepare(forged, k_bt, session, rng)
        verdict = trent_verify(bundle, k_at, k_bt, session, PAULI, "A", "projective", rng)
        assert not verdict.passed
        with pytest.raises(ProtocolError):
            bob_recover(verdict, session, "projective", rng)

    def test_malformed_bundle(self, rng):
        k_at, k_bt, session = initialize(2, rng)
        pair = sign("random", k_at, session, PAULI, rng)
        bundle = bob_prepare(pair, k_bt, session, rng)
        with pytest.raises(ProtocolError):
            trent_verify(replace(bundle, m_b=(0,)), k_at, k_bt, session, PAULI, "A", "projective", rng)

    def test_transcript_jsonl(self, rng):
        record = run_session(2, PAULI, "B", "swap", rng)
        lines = record.session.transcript.to_jsonl().splitlines()
        events = [json.loads(line)["event"] for line in lines]
        assert events[0] == "init"
        assert events.index("sign") < events.index("bob_prepare") < events.index("trent_verify") < events.index("bob_recover")
        assert [json.loads(line)["seq"] for line in lines] == list(range(len(lines)))


class TestHonest:
    @pytest.mark.parametrize("scheme", [PAULI, IH], ids=["pauli", "ih"])
    @pytest.mark.parametrize("variant", ["A", "B"])
    @pytest.mark.parametrize("mode", ["projective", "swap"])
    def test_accepts(self, rng, scheme, variant, mode):
        for _ in range(50):
            record = run_session(3, scheme, variant, mode, rng)
            assert record.verdict.passed
            assert record.result.accepted
            assert record.result.recovered_fidelity == pytest.approx(1.0, abs=1e-9)

    def test_named_cases(self, rng):
        assert run_honest_session(4, PAULI, "A", "swap", rng).accepted
        assert run_honest_session(4, IH, "B", "projective", rng).accepted

    def test_deterministic(self):
        a = run_session(3, PAULI, "B", "swap", np.random.default_rng(5))
        b = run_session(3, PAULI, "B", "swap", np.random.default_rng(5))
        assert a.k_at == b.k_at
        assert np.array_equal(a.original.sig.amplitudes, b.original.sig.amplitudes)
        assert a.session.transcript.to_jsonl() == b.session.transcript.to_jsonl()

    def test_variant_b_reconstruction_equals_message(self, rng):
        for _ in range(30):
            record = run_session(3, PAULI, "B", "projective", rng)
            assert equal_up_to_global_phase(record.verdict.reconstruction, record.original.message)

    def test_bell_record_uniform(self, rng):
        counts = np.zeros(4)
        for _ in range(2500):
            k_at, _, session = initialize(1, rng)
            pair = sign("random", k_at, session, PAULI, rng)
            plain = classical_otp(pair.m_a, alice_keys(k_at, 1).record_pad)
            counts[bits_to_outcomes(plain)[0]] += 1
        for c in counts:
            assert within_3_sigma(int(c), 2500, 0.25)

    def test_bob_bits_unbiased(self, rng):
        ones = 0
        shots = 4000
        for _ in range(shots):
            k_at, k_bt, session = initialize(1, rng)
            pair = sign("random", k_at, session, PAULI, rng)
            bundle = bob_prepare(pair, k_bt, session, rng)
            ones += classical_otp(bundle.m_b, bob_keys(k_bt, 1).record_pad)[0]
        assert within_3_sigma(ones, shots, 0.5)

    def test_bundle_round_trip(self, rng):
        k_at, k_bt, session = initialize(3, rng)
        pair = sign("random", k_at, session, IH, rng)
        bundle = bob_prepare(pair, k_bt, session, rng)
        keys = bob_keys(k_bt, 3)
        assert np.allclose(decrypt(bundle.message, keys.message).amplitudes, pair.message.amplitudes)
        assert np.allclose(decrypt(bundle.sig, keys.signature).amplitudes, pair.sig.amplitudes)


class TestTampering:
    def test_orthogonal_message_projective_rejects(self, rng):
        for _ in range(50):
            record = run_session(
                1, PAULI, "A", "projective", rng, [(1, 0)],
                tamper=lambda p: SignaturePair(make_product_state([(0, 1)]), p.m_a, p.sig),
            )
            assert not record.verdict.passed

    def test_orthogonal_message_swap_rejects_half(self, rng):
        shots = 4000
        rejected = 0
        for _ in range(shots):
            # orthogonal after rotation as well, since R is unitary
            record = run_session(
                1, PAULI, "A", "swap", rng, [(1, 0)],
                tamper=lambda p: SignaturePair(make_product_state([(0, 1)]), p.m_a, p.sig),
            )
            rejected += not record.verdict.passed
        assert within_3_sigma(rejected, shots, 0.5)

    def test_flipped_bell_bit_gives_x_on_trent_particle(self, rng):
        for _ in range(30):
            k_at, k_bt, session = initialize(2, rng)
            pair = sign("random", k_at, session, PAULI, rng)
            bundle = bob_prepare(pair, k_bt, session, rng)
            outcomes = bits_to_outcomes(classical_otp(pair.m_a, alice_keys(k_at, 2).record_pad))
            m_b = classical_otp(bundle.m_b, bob_keys(k_bt, 2).record_pad)
            flipped = (BellOutcome.from_bits(1 - outcomes[0].bit0, outcomes[0].bit1), outcomes[1])
            rebuilt = reconstruct(session.particles, flipped, m_b)
            assert equal_up_to_global_phase(rebuilt, PauliString("XI").apply(pair.message))
