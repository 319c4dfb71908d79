"""Statevector simulator for arbitrated quantum signatures and Pauli forgery attacks."""

from .pauli import PauliString, commutation_sign, conjugate_by_hadamard, multiply, to_gates
from .qotp import (
    IH,
    PAULI,
    EncryptionScheme,
    KeySchedule,
    SecretKey,
    classical_otp,
    decrypt,
    encrypt,
    rotation_op,
    uv_scheme,
    validate_encryption_set,
)
from .statevector import (
    BellOutcome,
    StateVector,
    apply_gate,
    equal_up_to_global_phase,
    haar_random_qubit,
    make_ghz,
    make_product_state,
    measure_bell,
    measure_x,
    swap_test,
)

__version__ = "0.1.0"
