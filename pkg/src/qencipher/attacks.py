"""Eavesdropper strategies acting on the in-transit ciphertext.

Every strategy is local to the attacked pairs, so each one reduces to a set of
Kraus operators on the two qubits ``(Q_k, S_k)`` of a pair (see
:func:`pair_kraus`). The channel path applies those operators to a density
matrix. The trajectory path samples Eve's measurement outcomes instead.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cipher import Ciphertext
from .qcore import (
    CNOT,
    I2,
    PAULIS,
    BREIDBART,
    ZAXIS,
    BlochVector,
    QuantumError,
    QuantumState,
    apply_channel,
    apply_gate,
    apply_matrix,
    bloch_projector,
    bloch_state,
    haar_qubit,
    haar_unitary_from_ket,
    is_unitary,
    measure_projective,
    partial_trace,
    permute_qubits,
    tensor,
)

VARIANTS = ("none", "ir_single", "ir_pair", "replace_random", "probe_circuit")

_c8, _s8 = np.cos(np.pi / 8), np.sin(np.pi / 8)
# Rotates the computational basis onto the Breidbart basis; Hermitian and self-inverse.
BREIDBART_U = np.array([[_c8, _s8], [_s8, -_c8]], dtype=complex)


def basis_unitary(v: BlochVector) -> np.ndarray:
    """Unitary W with W|0> along +v and W|1> along -v on the Bloch sphere."""
    return haar_unitary_from_ket(bloch_state(v))


@dataclass(frozen=True)
class InterceptResendMap:
    """Measure along ``measure`` and resend along ``resend`` (outcome i -> sign i)."""

    measure: BlochVector = ZAXIS
    resend: BlochVector = ZAXIS

    def __post_init__(self):
        for v in (self.measure, self.resend):
            if abs(v.norm - 1) > 1e-10:
                raise QuantumError(f"Bloch vector norm {v.norm} != 1")

    @property
    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        return bloch_projector(self.measure, 0), bloch_projector(self.measure, 1)

    @property
    def resend_states(self) -> tuple[np.ndarray, np.ndarray]:
        return bloch_projector(self.resend, 0), bloch_projector(self.resend, 1)

    def kraus(self) -> list[np.ndarray]:
        wm, wr = basis_unitary(self.measure), basis_unitary(self.resend)
        return [np.outer(wr[:, i], wm[:, i].conj()) for i in (0, 1)]

    def transfer(self) -> np.ndarray:
        """Outcome-independent unitary taking measured eigenstate i to resend state i."""
        return basis_unitary(self.resend) @ basis_unitary(self.measure).conj().T

    def apply_exact(self, rho: QuantumState) -> QuantumState:
        """$(rho) = sum_i Tr(rho m_i) r_i on a single qubit."""
        if rho.n_qubits != 1:
            raise QuantumError("intercept/resend map acts on one qubit")
        r = rho.density()
        out = sum(np.trace(r @ m).real * s for m, s in zip(self.projectors, self.resend_states))
        return QuantumState(out)

    def apply_sampled(self, rho: QuantumState, rng: np.random.Generator) -> tuple[int, QuantumState]:
        if rho.n_qubits != 1:
            raise QuantumError("intercept/resend map acts on one qubit")
        outcome, _, _ = measure_projective(rho, list(self.projectors), rng)
        return outcome, QuantumState(self.resend_states[outcome])

    def apply_dilated(self, rho: QuantumState) -> QuantumState:
        """Unitary circuit: rotate to the measure basis, copy to an ancilla by CNOT, rotate to the resend basis."""
        if rho.n_qubits != 1:
            raise QuantumError("intercept/resend map acts on one qubit")
        st = tensor(rho.to_density(), QuantumState.basis("0").to_density())
        st = apply_gate(st, basis_unitary(self.measure).conj().T, [0])
        st = apply_gate(st, CNOT, [0, 1])
        st = apply_gate(st, basis_unitary(self.resend), [0])
        return partial_trace(st, [0])


@dataclass(frozen=True)
class ProbeGate:
    """A unitary on local probe wires: 0 = Q, 1 = S, 2.. = Eve's ancillas."""

    matrix: np.ndarray
    wires: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        wires = tuple(int(w) for w in self.wires)
        if m.shape != (1 << len(wires),) * 2:
            raise QuantumError(f"gate shape {m.shape} does not match {len(wires)} wires")
        if not is_unitary(m):
            raise QuantumError(f"probe gate {self.label or wires} is not unitary")
        if len(set(wires)) != len(wires):
            raise QuantumError("duplicate probe wire")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "wires", wires)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "wires": list(self.wires),
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeGate":
        m = np.array(d["re"], dtype=float) + 1j * np.array(d.get("im", np.zeros_like(d["re"])), dtype=float)
        return cls(m, tuple(d["wires"]), d.get("label", ""))


def _vec_dict(v: BlochVector) -> list[float]:
    return [float(v.x), float(v.y), float(v.z)]


@dataclass(frozen=True)
class AttackSpec:
    """Tagged description of Eve's strategy.

    ``pairs`` lists the attacked pair indices; ``None`` means every pair.
    ``vectors`` holds ``(measure, resend)`` for ir_single and ``(X1, X2, X3, X4)``
    for ir_pair, where X1/X3 measure/resend on Q and X2/X4 on S.
    """

    variant: str = "none"
    pairs: tuple[int, ...] | None = None
    side: str = "S"
    vectors: tuple[BlochVector, ...] = ()
    gates: tuple[ProbeGate, ...] = ()
    n_ancillas: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown attack variant {self.variant!r}")
        if self.pairs is not None:
            object.__setattr__(self, "pairs", tuple(sorted(set(int(p) for p in self.pairs))))
            if any(p < 0 for p in self.pairs):
                raise ValueError("negative pair index")
        if self.side not in ("Q", "S"):
            raise ValueError("side must be 'Q' or 'S'")
        need = {"ir_single": 2, "ir_pair": 4}.get(self.variant, 0)
        if len(self.vectors) != need:
            raise ValueError(f"{self.variant} needs {need} Bloch vectors, got {len(self.vectors)}")
        for v in self.vectors:
            if abs(v.norm - 1) > 1e-10:
                raise QuantumError(f"Bloch vector norm {v.norm} != 1")
        if self.variant == "probe_circuit":
            width = 2 + self.n_ancillas
            for g in self.gates:
                if max(g.wires) >= width:
                    raise ValueError(f"probe gate wires {g.wires} exceed {width} wires")

    # constructors -------------------------------------------------------
    @classmethod
    def none(cls) -> "AttackSpec":
        return cls("none")

    @classmethod
    def ir_single(cls, side="S", measure=ZAXIS, resend=None, pairs=None) -> "AttackSpec":
        return cls("ir_single", pairs, side, (measure, measure if resend is None else resend))

    @classmethod
    def ir_pair(cls, x1=ZAXIS, x2=ZAXIS, x3=ZAXIS, x4=ZAXIS, pairs=None) -> "AttackSpec":
        return cls("ir_pair", pairs, vectors=(x1, x2, x3, x4))

    @classmethod
    def replace_random(cls, pairs=None) -> "AttackSpec":
        return cls("replace_random", pairs)

    @classmethod
    def probe(cls, gates: Sequence[ProbeGate], n_ancillas: int, pairs=None) -> "AttackSpec":
        return cls("probe_circuit", pairs, gates=tuple(gates), n_ancillas=int(n_ancillas))

    def targets(self, n_pairs: int) -> tuple[int, ...]:
        if self.variant == "none":
            return ()
        if self.pairs is None:
            return tuple(range(n_pairs))
        bad = [p for p in self.pairs if p >= n_pairs]
        if bad:
            raise ValueError(f"pair indices {bad} out of range for {n_pairs} pairs")
        return self.pairs

    # serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"variant": self.variant}
        if self.pairs is not None:
            d["pairs"] = list(self.pairs)
        if self.variant == "ir_single":
            d["side"] = self.side
            d["measure"], d["resend"] = (_vec_dict(v) for v in self.vectors)
        elif self.variant == "ir_pair":
            d["vectors"] = [_vec_dict(v) for v in self.vectors]
        elif self.variant == "probe_circuit":
            d["n_ancillas"] = self.n_ancillas
            d["gates"] = [g.to_dict() for g in self.gates]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttackSpec":
        variant = d.get("variant", "none")
        pairs = d.get("pairs")
        if variant == "ir_single":
            meas = BlochVector(*d.get("measure", (0, 0, 1)))
            return cls.ir_single(d.get("side", "S"), meas, BlochVector(*d.get("resend", _vec_dict(meas))), pairs)
        if variant == "ir_pair":
            vecs = d.get("vectors", [(0, 0, 1)] * 4)
            return cls.ir_pair(*(BlochVector(*v) for v in vecs), pairs=pairs)
        if variant == "probe_circuit":
            return cls.probe([ProbeGate.from_dict(g) for g in d.get("gates", [])], d.get("n_ancillas", 0), pairs)
        return cls(variant, pairs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "AttackSpec":
        return cls.from_dict(json.loads(s))


def breidbart_spec(side: str = "S", pairs=None) -> AttackSpec:
    """Intercept/resend with measure = resend = the Breidbart vector on ``side`` ("Q", "S" or "pair")."""
    if side == "pair":
        return AttackSpec.ir_pair(BREIDBART, BREIDBART, BREIDBART, BREIDBART, pairs)
    return AttackSpec.ir_single(side, BREIDBART, BREIDBART, pairs)


_DEPOLARIZE = [PAULIS[s] / 2 for s in "0xyz"]


def probe_unitary(gates: Sequence[ProbeGate], n_wires: int) -> np.ndarray:
    u = np.eye(1 << n_wires, dtype=complex)
    for g in gates:
        u = _embed(g.matrix, g.wires, n_wires) @ u
    return u


def _embed(m: np.ndarray, wires: Sequence[int], n_wires: int) -> np.ndarray:
    """Full-register matrix of ``m`` acting on ``wires`` (big-endian)."""
    k = len(wires)
    rest = [w for w in range(n_wires) if w not in wires]
    big = np.kron(m, np.eye(1 << (n_wires - k)))
    order = list(wires) + rest
    # big acts on wires in `order`; permute axes back to natural order
    t = big.reshape((2,) * (2 * n_wires))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n_wires + i for i in inv])
    return t.reshape(1 << n_wires, 1 << n_wires)


def pair_kraus(spec: AttackSpec) -> list[np.ndarray]:
    """Kraus operators of the attack on one targeted pair (4x4, ordered Q then S)."""
    if spec.variant == "none":
        return [np.eye(4, dtype=complex)]
    if spec.variant == "ir_single":
        k1 = InterceptResendMap(*spec.vectors).kraus()
        return [np.kron(k, I2) if spec.side == "Q" else np.kron(I2, k) for k in k1]
    if spec.variant == "ir_pair":
        x1, x2, x3, x4 = spec.vectors
        kq = InterceptResendMap(x1, x3).kraus()
        ks = InterceptResendMap(x2, x4).kraus()
        return [np.kron(a, b) for a in kq for b in ks]
    if spec.variant == "replace_random":
        return [np.kron(a, b) for a in _DEPOLARIZE for b in _DEPOLARIZE]
    if spec.variant == "probe_circuit":
        width = 2 + spec.n_ancillas
        u = probe_unitary(spec.gates, width).reshape(4, 1 << spec.n_ancillas, 4, 1 << spec.n_ancillas)
        # K_e = (I (x) <e|) U (I (x) |0>)
        return [u[:, e, :, 0] for e in range(1 << spec.n_ancillas)]
    raise ValueError(spec.variant)


@dataclass
class EveMemory:
    """What Eve holds after her in-transit action."""

    outcomes: list = field(default_factory=list)
    held: QuantumState | None = None
    held_positions: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "outcomes": [list(o) for o in self.outcomes],
            "held_qubits": list(self.held_positions),
        }


def _kraus_channel(state: QuantumState, spec: AttackSpec, targets) -> QuantumState:
    kraus = pair_kraus(spec)
    for k in targets:
        state = apply_channel(state, kraus, [2 * k, 2 * k + 1])
    return state


def _with_ancillas(state: QuantumState, n_anc: int) -> QuantumState:
    anc = QuantumState.basis([0] * n_anc)
    return tensor(state, anc if state.is_vector else anc.to_density())


def apply_attack(
    c: Ciphertext, spec: AttackSpec, rng: np.random.Generator, mode: str = "channel"
) -> tuple[Ciphertext, EveMemory]:
    """Run Eve's strategy on ``c``.

    ``mode="channel"`` returns the exact averaged state (a density matrix).
    ``mode="trajectory"`` samples Eve's outcomes and returns one branch.
    """
    if mode not in ("channel", "trajectory"):
        raise ValueError(f"unknown attack mode {mode!r}")
    targets = spec.targets(c.n_pairs)
    mem = EveMemory()
    state = c.state
    n = state.n_qubits
    if spec.variant == "none":
        return Ciphertext(state, c.missing), mem

    if spec.variant == "replace_random":
        positions = [q for k in targets for q in (2 * k, 2 * k + 1)]
        mem.held = partial_trace(state, positions)
        mem.held_positions = tuple(positions)
        if mode == "channel":
            state = _kraus_channel(state.to_density(), spec, targets)
        else:
            keep = [q for q in range(n) if q not in positions]
            rest = partial_trace(state, keep) if keep else QuantumState(np.ones((1, 1)))
            fresh = [QuantumState(haar_qubit(rng)).to_density() for _ in positions]
            joint = tensor(rest, *fresh)
            order = [0] * n
            for new_slot, q in enumerate(keep + positions):
                order[q] = new_slot
            state = permute_qubits(joint, order)
        return Ciphertext(state, c.missing), mem

    if spec.variant == "probe_circuit":
        a = spec.n_ancillas
        for k in targets:
            st = _with_ancillas(state, a)
            wires = [2 * k, 2 * k + 1] + [n + i for i in range(a)]
            u = probe_unitary(spec.gates, 2 + a)
            st = QuantumState(apply_matrix(st, u, wires))
            anc = list(range(n, n + a))
            if a:
                mem.outcomes.append(("probe", k, "ancillas-held"))
                held = partial_trace(st, anc)
                mem.held = held if mem.held is None else tensor(mem.held, held)
                state = partial_trace(st, list(range(n)))
            else:
                state = st
        mem.held_positions = ()
        return Ciphertext(state, c.missing), mem

    # intercept/resend
    if mode == "channel":
        state = _kraus_channel(state.to_density(), spec, targets)
        return Ciphertext(state, c.missing), mem
    if spec.variant == "ir_single":
        maps = [(0 if spec.side == "Q" else 1, InterceptResendMap(*spec.vectors))]
    else:
        x1, x2, x3, x4 = spec.vectors
        maps = [(0, InterceptResendMap(x1, x3)), (1, InterceptResendMap(x2, x4))]
    for k in targets:
        for offset, m in maps:
            q = 2 * k + offset
            outcome, post, _ = measure_projective(state, list(m.projectors), rng, targets=[q])
            state = apply_gate(post, m.transfer(), [q])
            mem.outcomes.append((k, "QS"[offset], outcome))
    return Ciphertext(state, c.missing), mem


def probe_gate_u(wire: int) -> ProbeGate:
    return ProbeGate(BREIDBART_U, (wire,), f"U{wire}")


def probe_gate_cnot(control: int, target: int) -> ProbeGate:
    return ProbeGate(CNOT, (control, target), f"C{control}{target}")


def ir_pair_probe_gates() -> tuple[list[ProbeGate], int]:
    """Independent Breidbart intercept/resend on Q and S written as a probe circuit with two ancillas."""
    gates = [
        probe_gate_u(0), probe_gate_cnot(0, 2), probe_gate_u(0),
        probe_gate_u(1), probe_gate_cnot(1, 3), probe_gate_u(1),
    ]
    return gates, 2

