"""Pauli-mask encryption, signature entanglement and conjugate-basis masking.

A ciphertext for an n-qubit payload holds 2n qubits in interleaved order
``[Q1, S1, Q2, S2, ...]``: pair ``k`` lives on qubits ``(2k, 2k + 1)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .qcore import (
    CNOT,
    PAULIS,
    QuantumError,
    QuantumState,
    H,
    I2,
    X,
    apply_gate,
    apply_matrix,
    kron,
    partial_trace,
    permute_qubits,
    tensor,
)

PAULI_SYMBOLS = ("0", "x", "y", "z")
MASK_OPS = ("I", "H", "X", "HX")
MASK_MATRICES = {"I": I2, "H": H, "X": X, "HX": H @ X}
MAX_AVERAGE_QUBITS = 3


def _bits_to_hex(bits: str) -> str:
    if not bits:
        return ""
    return format(int(bits, 2), "0{}x".format((len(bits) + 3) // 4))


def _hex_to_bits(hexstr: str, nbits: int) -> str:
    if nbits == 0:
        return ""
    value = int(hexstr, 16)
    if value >> nbits:
        raise ValueError(f"hex {hexstr!r} does not fit in {nbits} bits")
    return format(value, f"0{nbits}b")


@dataclass(frozen=True)
class PauliKey:
    """First password: one Pauli symbol per payload qubit (2 bits each)."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        bad = [s for s in symbols if s not in PAULI_SYMBOLS]
        if bad:
            raise ValueError(f"unknown Pauli symbols {bad}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def identity(cls, n: int) -> "PauliKey":
        return cls(("0",) * n)

    def __len__(self):
        return len(self.symbols)

    def to_bits(self) -> str:
        return "".join(format(PAULI_SYMBOLS.index(s), "02b") for s in self.symbols)

    @classmethod
    def from_bits(cls, bits: str) -> "PauliKey":
        if len(bits) % 2:
            raise ValueError("Pauli key bit string must have even length")
        return cls(tuple(PAULI_SYMBOLS[int(bits[i : i + 2], 2)] for i in range(0, len(bits), 2)))

    def to_hex(self) -> str:
        return _bits_to_hex(self.to_bits())

    @classmethod
    def from_hex(cls, hexstr: str, n: int) -> "PauliKey":
        return cls.from_bits(_hex_to_bits(hexstr, 2 * n))

    def matrices(self) -> list[np.ndarray]:
        return [PAULIS[s] for s in self.symbols]

    def unitary(self) -> np.ndarray:
        return kron(*self.matrices())


@dataclass(frozen=True)
class Signature:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("signature bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return len(self.bits)

    def to_bits(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class BasisMask:
    """Second password: ``(L_{1,1}, L_{1,2}, ..., L_{n,1}, L_{n,2})`` over {I, H, X, HX}.

    ``HX`` is the operator product H @ X (flip first, then Hadamard).
    """

    ops: tuple[str, ...]

    def __post_init__(self):
        ops = tuple(str(o) for o in self.ops)
        bad = [o for o in ops if o not in MASK_OPS]
        if bad:
            raise ValueError(f"unknown mask operators {bad}")
        object.__setattr__(self, "ops", ops)

    @classmethod
    def identity(cls, n: int) -> "BasisMask":
        return cls(("I",) * (2 * n))

    def __len__(self):
        return len(self.ops)

    @property
    def n_pairs(self) -> int:
        return len(self.ops) // 2

    def to_bits(self) -> str:
        return "".join(format(MASK_OPS.index(o), "02b") for o in self.ops)

    @classmethod
    def from_bits(cls, bits: str) -> "BasisMask":
        if len(bits) % 4:
            raise ValueError("basis mask bit string length must be a multiple of 4")
        return cls(tuple(MASK_OPS[int(bits[i : i + 2], 2)] for i in range(0, len(bits), 2)))

    def to_hex(self) -> str:
        return _bits_to_hex(self.to_bits())

    @classmethod
    def from_hex(cls, hexstr: str, n: int) -> "BasisMask":
        return cls.from_bits(_hex_to_bits(hexstr, 4 * n))

    def matrices(self) -> list[np.ndarray]:
        return [MASK_MATRICES[o] for o in self.ops]

    def pair(self, k: int) -> tuple[str, str]:
        return self.ops[2 * k], self.ops[2 * k + 1]


@dataclass(frozen=True, eq=False)
class Ciphertext:
    """The 2n transmitted qubits; ``missing`` marks qubit slots that never arrived."""

    state: QuantumState
    missing: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.state.n_qubits % 2:
            raise QuantumError("ciphertext must hold an even number of qubits")
        object.__setattr__(self, "missing", frozenset(int(q) for q in self.missing))

    @property
    def n_pairs(self) -> int:
        return self.state.n_qubits // 2


def sample_pauli_key(n: int, rng: np.random.Generator) -> PauliKey:
    if n < 1:
        raise ValueError("need at least one payload qubit")
    return PauliKey(tuple(PAULI_SYMBOLS[i] for i in rng.integers(0, 4, size=n)))


def sample_signature(n: int, rng: np.random.Generator) -> Signature:
    if n < 1:
        raise ValueError("need at least one payload qubit")
    return Signature(tuple(int(b) for b in rng.integers(0, 2, size=n)))


def sample_basis_mask(n: int, rng: np.random.Generator) -> BasisMask:
    if n < 1:
        raise ValueError("need at least one payload qubit")
    return BasisMask(tuple(MASK_OPS[i] for i in rng.integers(0, 4, size=2 * n)))


def all_pauli_keys(n: int):
    for syms in itertools.product(PAULI_SYMBOLS, repeat=n):
        yield PauliKey(syms)


def all_pair_masks():
    """The 16 ``(L1, L2)`` choices for one pair."""
    return list(itertools.product(MASK_OPS, repeat=2))


def apply_pauli_mask(state: QuantumState, key: PauliKey, inverse: bool = False) -> QuantumState:
    if len(key) != state.n_qubits:
        raise QuantumError(f"key length {len(key)} != {state.n_qubits} qubits")
    for q, m in enumerate(key.matrices()):
        state = apply_gate(state, m.conj().T if inverse else m, [q])
    return state


def average_over_masks(rho: QuantumState) -> QuantumState:
    """(1/4^n) sum_j U_j rho U_j^dagger over every Pauli string, by explicit summation."""
    n = rho.n_qubits
    if n > MAX_AVERAGE_QUBITS:
        raise QuantumError(f"explicit Pauli average limited to {MAX_AVERAGE_QUBITS} qubits")
    rho = rho.to_density()
    total = np.zeros((rho.dim, rho.dim), dtype=complex)
    for key in all_pauli_keys(n):
        total += apply_pauli_mask(rho, key).data
    return QuantumState(total / 4**n)


def interleave(payload: QuantumState, signature_state: QuantumState) -> QuantumState:
    """Place signature qubit k right after payload qubit k."""
    n = payload.n_qubits
    if signature_state.n_qubits != n:
        raise QuantumError("payload and signature sizes differ")
    joint = tensor(payload, signature_state)
    order = [q for k in range(n) for q in (k, n + k)]
    return permute_qubits(joint, order)


def entangle_pairs(state: QuantumState) -> QuantumState:
    """CNOT from Q_k onto S_k on every pair (self-inverse)."""
    for k in range(state.n_qubits // 2):
        state = QuantumState(apply_matrix(state, CNOT, [2 * k, 2 * k + 1]))
    return state


def apply_basis_mask(state: QuantumState, mask: BasisMask, inverse: bool = False) -> QuantumState:
    if len(mask) != state.n_qubits:
        raise QuantumError(f"mask length {len(mask)} != {state.n_qubits} qubits")
    for q, m in enumerate(mask.matrices()):
        state = QuantumState(apply_matrix(state, m.conj().T if inverse else m, [q]))
    return state


def attach_signature(state: QuantumState, sig: Signature) -> QuantumState:
    """Interleave ``|a>`` and entangle each pair: the unmasked 2n-qubit encoding."""
    if len(sig) != state.n_qubits:
        raise QuantumError(f"signature length {len(sig)} != {state.n_qubits} qubits")
    return entangle_pairs(interleave(state, QuantumState.basis(sig.bits)))


def encrypt(psi: QuantumState, key: PauliKey, sig: Signature, mask: BasisMask) -> Ciphertext:
    n = psi.n_qubits
    if not (len(key) == n and len(sig) == n and len(mask) == 2 * n):
        raise QuantumError(
            f"password lengths (key {len(key)}, sig {len(sig)}, mask {len(mask)}) "
            f"inconsistent with {n} payload qubits"
        )
    encoded = attach_signature(apply_pauli_mask(psi, key), sig)
    return Ciphertext(apply_basis_mask(encoded, mask))


def decrypt_unmask(c: Ciphertext | QuantumState, mask: BasisMask) -> QuantumState:
    """Undo the basis mask and the pair CNOTs, leaving S_k in ``|a_k (+) error>``."""
    state = c.state if isinstance(c, Ciphertext) else c
    return entangle_pairs(apply_basis_mask(state, mask, inverse=True))


class SignatureCheck(NamedTuple):
    passed: bool
    bits: tuple[int, ...]
    q_state: QuantumState
    pass_probability: float


def signature_projector(sig: Signature) -> np.ndarray:
    p = np.zeros((1 << len(sig),) * 2, dtype=complex)
    idx = int(sig.to_bits() or "0", 2)
    p[idx, idx] = 1
    return p


def _born(state: QuantumState, op: np.ndarray, targets) -> tuple[float, np.ndarray]:
    out = apply_matrix(state, op, targets)
    p = np.vdot(out, out).real if state.is_vector else np.trace(out).real
    return float(min(max(p, 0.0), 1.0)), out


def verify_signature(state: QuantumState, sig: Signature, rng: np.random.Generator) -> SignatureCheck:
    """Measure every S qubit in the computational basis and compare with ``sig``.

    ``pass_probability`` is the exact Born probability that all bits match.
    """
    n = state.n_qubits // 2
    if len(sig) != n:
        raise QuantumError(f"signature length {len(sig)} != {n} pairs")
    s_qubits = [2 * k + 1 for k in range(n)]
    pass_probability, _ = _born(state, signature_projector(sig), s_qubits)
    bits = []
    for q in s_qubits:
        p0, out0 = _born(state, np.diag([1, 0]).astype(complex), [q])
        bit = int(rng.random() >= p0)
        if bit:
            p, out = _born(state, np.diag([0, 1]).astype(complex), [q])
        else:
            p, out = p0, out0
        state = QuantumState(out / (np.sqrt(p) if state.is_vector else p))
        bits.append(bit)
    q_state = partial_trace(state, [2 * k for k in range(n)])
    if state.is_vector:
        # S qubits are now in basis states, so the Q marginal is pure
        q_state = QuantumState(q_state.pure_vector())
    return SignatureCheck(tuple(bits) == sig.bits, tuple(bits), q_state, pass_probability)


def decrypt_final(q_state: QuantumState, key: PauliKey) -> QuantumState:
    return apply_pauli_mask(q_state, key, inverse=True)


def pair_check_projector(a: int) -> np.ndarray:
    """Bob's pass projector on one pair in the unmasked frame (before the CNOT is undone)."""
    p = np.zeros((4, 4), dtype=complex)
    for y in (0, 1):
        idx = 2 * y + (y ^ a)
        p[idx, idx] = 1
    return p


def masked_check_projector(l1: str, l2: str, a: int) -> np.ndarray:
    """The same projector expressed in the masked frame: sum_y L1|y><y|L1^+ (x) L2|y+a><y+a|L2^+."""
    v = np.kron(MASK_MATRICES[l1], MASK_MATRICES[l2])
    return v @ pair_check_projector(a) @ v.conj().T


def check_pass_probability(state: QuantumState, sig: Signature) -> float:
    """Exact probability that every S qubit reads its signature bit, for a state from decrypt_unmask."""
    n = state.n_qubits // 2
    if len(sig) != n:
        raise QuantumError(f"signature length {len(sig)} != {n} pairs")
    return _born(state, signature_projector(sig), [2 * k + 1 for k in range(n)])[0]


def roundtrip(psi: QuantumState, key: PauliKey, sig: Signature, mask: BasisMask, rng) -> tuple[SignatureCheck, QuantumState]:
    """Honest decrypt pipeline; handy for tests."""
    check = verify_signature(decrypt_unmask(encrypt(psi, key, sig, mask), mask), sig, rng)
    return check, decrypt_final(check.q_state, key)

