"""Iterated encryption ("privacy amplification") and its pass probabilities.

Level 1 wraps a one-qubit payload with one signature qubit. Level k wraps the
whole 2^(k-1)-qubit ciphertext of level k-1 with 2^(k-1) fresh signature
qubits, so after n levels 2^n qubits travel and 2^n - 1 signature bits are
checked.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..attacks import AttackSpec, apply_attack
from ..cipher import (
    BasisMask,
    Ciphertext,
    PauliKey,
    Signature,
    apply_pauli_mask,
    decrypt_unmask,
    encrypt,
    sample_basis_mask,
    sample_pauli_key,
    sample_signature,
    signature_projector,
)
from ..qcore import QuantumError, QuantumState, apply_matrix, partial_trace
from .exact import attack_superop, key_average, local_product, pair_transfer

MAX_LEVELS = 3


@dataclass(frozen=True)
class LevelRecord:
    key: PauliKey
    sig: Signature
    mask: BasisMask


@dataclass
class AmplificationChain:
    levels: int
    psi1: QuantumState
    records: list[LevelRecord] = field(default_factory=list)
    states: list[QuantumState] = field(default_factory=list)

    def __post_init__(self):
        if self.total_qubits != 1 << self.levels:
            raise QuantumError("chain state size inconsistent with its level count")

    @property
    def total_qubits(self) -> int:
        return self.states[-1].n_qubits if self.states else 1 << self.levels

    @property
    def signatures_per_level(self) -> tuple[int, ...]:
        return tuple(1 << (k - 1) for k in range(1, self.levels + 1))

    @property
    def ciphertext(self) -> Ciphertext:
        return Ciphertext(self.states[-1])

    def pass_branch(self, received: QuantumState) -> QuantumState:
        """Unnormalised payload on the branch where every signature check passes.

        The plain QuantumState constructor does not insist on unit trace, so the
        sub-normalised branch state is carried through the usual helpers.
        """
        st = received
        for rec in reversed(self.records):
            st = decrypt_unmask(st, rec.mask)
            n = st.n_qubits // 2
            s_qubits = [2 * k + 1 for k in range(n)]
            st = QuantumState(apply_matrix(st.to_density(), signature_projector(rec.sig), s_qubits))
            st = partial_trace(st, [2 * k for k in range(n)])
            st = apply_pauli_mask(st, rec.key, inverse=True)
        return st

    def pass_probability(self, received: QuantumState) -> float:
        return float(np.trace(self.pass_branch(received).density()).real)

    def decrypt(self, received: QuantumState | None = None) -> tuple[float, QuantumState | None]:
        """Return (pass probability, normalised payload given a pass)."""
        branch = self.pass_branch(self.states[-1] if received is None else received)
        p = float(np.trace(branch.density()).real)
        if p <= 1e-15:
            return 0.0, None
        return p, QuantumState(branch.density() / p)


def privacy_amplification(psi1: QuantumState, levels: int, rng: np.random.Generator) -> AmplificationChain:
    """Encrypt ``psi1`` ``levels`` times with fresh, independent passwords per level."""
    if psi1.n_qubits != 1:
        raise QuantumError("privacy amplification starts from a one-qubit payload")
    if not 1 <= levels <= MAX_LEVELS:
        raise ValueError(f"levels must be between 1 and {MAX_LEVELS}")
    st = psi1
    records, states = [], []
    for _ in range(levels):
        n = st.n_qubits
        rec = LevelRecord(sample_pauli_key(n, rng), sample_signature(n, rng), sample_basis_mask(n, rng))
        st = encrypt(st, rec.key, rec.sig, rec.mask).state
        records.append(rec)
        states.append(st)
    return AmplificationChain(levels, psi1, records, states)


def attacked_pass_probability(chain: AmplificationChain, spec: AttackSpec, rng=None) -> float:
    """Exact pass probability for this chain's own passwords with ``spec`` applied to the transmitted qubits."""
    c, _ = apply_attack(chain.ciphertext, spec, rng or np.random.default_rng(0), mode="channel")
    return chain.pass_probability(c.state)


def averaged_level_map(levels: int, spec: AttackSpec) -> np.ndarray:
    """One-qubit transfer map of the whole chain, averaged over every password of every level.

    ``spec`` acts on every transmitted pair. The per-level maps are products
    over qubits, so each level contributes a single 4x4 superoperator.
    """
    if not 1 <= levels <= MAX_LEVELS:
        raise ValueError(f"levels must be between 1 and {MAX_LEVELS}")
    if spec.pairs is not None:
        raise ValueError("the averaged chain map assumes every transmitted pair is attacked")
    pair_map = attack_superop(spec) if spec.variant != "none" else np.eye(16, dtype=complex)
    for _ in range(levels):
        qubit_map = key_average(pair_transfer(pair_map, None))
        pair_map = local_product(qubit_map, qubit_map)
    return qubit_map


def chain_pass_probability(psi1: QuantumState, levels: int, spec: AttackSpec) -> float:
    """Pass probability of all signature checks, averaged over all passwords."""
    m = averaged_level_map(levels, spec)
    rho = psi1.density().reshape(-1)
    return float(np.trace((m @ rho).reshape(2, 2)).real)


def ir_bound(levels: int) -> float:
    """(3/4)^(N/2) with N = 2^levels transmitted qubits."""
    return 0.75 ** ((1 << levels) / 2)


def replacement_pass_probability(levels: int) -> float:
    """(1/2)^(number of signature bits) = (1/2)^(2^levels - 1)."""
    return 0.5 ** ((1 << levels) - 1)

