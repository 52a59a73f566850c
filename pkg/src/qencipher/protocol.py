"""The six-step Alice/Bob transmission protocol as an explicit state machine.

Quantum data moves through a :class:`QuantumChannel` that hands ownership to
whoever takes it; classical messages go to an append-only
:class:`ClassicalChannel` that every party, Eve included, can read.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._fmt import dumps
from .attacks import AttackSpec, EveMemory, apply_attack
from .cipher import (
    BasisMask,
    Ciphertext,
    PauliKey,
    Signature,
    apply_basis_mask,
    decrypt_final,
    decrypt_unmask,
    encrypt,
    entangle_pairs,
    interleave,
    sample_basis_mask,
    sample_pauli_key,
    sample_signature,
    verify_signature,
)
from .qcore import CNOT, I2, X, QuantumError, QuantumState, apply_gate, apply_matrix, fidelity, partial_trace, tensor

VERDICTS = ("delivered", "aborted-signature-mismatch", "aborted-arrival")

# One step of the presence network: CNOT(qubit -> ancilla) followed by X on the qubit.
# Applied twice it equals X on the ancilla alone, so the qubit is left untouched.
ARRIVAL_GATE = np.kron(X, I2) @ CNOT


class ChannelClosedError(RuntimeError):
    """Raised when anyone tries to use the quantum channel after Bob closed it."""


def protocol_rng(seed: int, trial: int | None = None) -> np.random.Generator:
    """Independent generator for (master seed, trial index)."""
    if trial is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(trial),)))


@dataclass(frozen=True)
class Record:
    index: int
    sender: str
    kind: str
    payload: tuple  # sorted (key, value) pairs; records are immutable

    def get(self, name, default=None):
        return dict(self.payload).get(name, default)

    def to_dict(self) -> dict:
        return {"index": self.index, "sender": self.sender, "kind": self.kind, **dict(self.payload)}


class ClassicalChannel:
    """Append-only public log."""

    def __init__(self):
        self._log: list[Record] = []

    def post(self, sender: str, kind: str, **payload) -> Record:
        rec = Record(len(self._log), sender, kind, tuple(sorted(payload.items())))
        self._log.append(rec)
        return rec

    @property
    def log(self) -> tuple[Record, ...]:
        return tuple(self._log)

    def last(self, kind: str) -> Record | None:
        for rec in reversed(self._log):
            if rec.kind == kind:
                return rec
        return None


class QuantumChannel:
    """Holds at most one ciphertext; every access moves it out of the channel."""

    def __init__(self):
        self._in_transit: Ciphertext | None = None
        self._open = True

    @property
    def open_flag(self) -> bool:
        return self._open

    @property
    def in_transit(self) -> Ciphertext | None:
        return self._in_transit

    def _take(self) -> Ciphertext:
        if self._in_transit is None:
            raise QuantumError("nothing in transit")
        c, self._in_transit = self._in_transit, None
        return c

    def send(self, c: Ciphertext) -> None:
        if not self._open:
            raise ChannelClosedError("quantum channel is closed")
        if self._in_transit is not None:
            raise QuantumError("a ciphertext is already in transit")
        self._in_transit = c

    def intercept(self, hook: Callable[[Ciphertext], Ciphertext]) -> None:
        """Give the ciphertext to ``hook`` and put whatever it returns back in transit."""
        if not self._open:
            raise ChannelClosedError("quantum channel is closed; interception rejected")
        given = self._take()
        returned = hook(given)
        if returned is given:
            returned = Ciphertext(QuantumState(np.array(given.state.data)), given.missing)
        self._in_transit = returned

    def receive(self) -> Ciphertext:
        if not self._open:
            raise ChannelClosedError("quantum channel is closed")
        return self._take()

    def close(self) -> None:
        self._open = False


def _arrival_network(state: QuantumState, q: int) -> tuple[bool, QuantumState]:
    """Run the two-step ancilla network on qubit ``q`` and read the ancilla."""
    n = state.n_qubits
    anc = QuantumState.basis([0])
    joint = tensor(state, anc if state.is_vector else anc.to_density())
    joint = apply_gate(apply_gate(joint, ARRIVAL_GATE, [q, n]), ARRIVAL_GATE, [q, n])
    proj1 = np.diag([0, 1]).astype(complex)
    out = apply_matrix(joint, proj1, [n])
    p1 = float(np.vdot(out, out).real if joint.is_vector else np.trace(out).real)
    present = p1 > 0.5
    if not present:
        out = apply_matrix(joint, np.diag([1, 0]).astype(complex), [n])
        p1 = 1 - p1
    post = QuantumState(out / (np.sqrt(p1) if joint.is_vector else p1))
    kept = partial_trace(post, range(n))
    return present, QuantumState(kept.pure_vector()) if post.is_vector else kept


def arrival_check(channel: QuantumChannel) -> tuple[bool, ...]:
    """Presence flag for every expected qubit slot, without disturbing the payload.

    Present slots run the ancilla network (the ancilla ends in |1>); slots
    marked missing have no qubit to interact with, so their ancilla stays |0>.
    """
    c = channel.in_transit
    if c is None:
        return ()
    state = c.state
    flags = []
    for q in range(state.n_qubits):
        if q in c.missing:
            flags.append(False)
            continue
        present, state = _arrival_network(state, q)
        flags.append(present)
    channel._in_transit = Ciphertext(state, c.missing)
    return tuple(flags)


@dataclass
class ProtocolConfig:
    n_qubits: int
    seed: int = 0
    trial: int | None = None
    adversary: AttackSpec | None = None
    attack_mode: str = "trajectory"
    bob_reports_early: bool = False
    eve_swap: bool = False  # Eve tries the swap attack as soon as the mask is public
    eve_fake: QuantumState | None = None
    eve_removes: tuple[int, ...] = ()  # pairs Eve takes off the channel
    signature: Signature | None = None  # fix Alice's signature instead of sampling it

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be at least 1")
        if self.attack_mode not in ("trajectory", "channel"):
            raise ValueError(f"unknown attack mode {self.attack_mode!r}")
        if self.signature is not None and len(self.signature) != self.n_qubits:
            raise ValueError("fixed signature length differs from n_qubits")
        if self.eve_fake is not None and self.eve_fake.n_qubits != self.n_qubits:
            raise ValueError("Eve's fake payload must have n_qubits qubits")
        if any(not 0 <= k < self.n_qubits for k in self.eve_removes):
            raise ValueError("eve_removes names a pair outside the ciphertext")


@dataclass
class Transcript:
    n_qubits: int
    seed: int
    trial: int | None = None
    steps: list[dict] = field(default_factory=list)
    classical_log: tuple[Record, ...] = ()
    verdict: str = ""
    bob_output: QuantumState | None = None
    bob_fidelity: float | None = None
    eve_knowledge: dict = field(default_factory=dict)
    eve_state: QuantumState | None = None

    def event(self, step: int, actor: str, action: str, **details) -> None:
        self.steps.append({"step": step, "actor": actor, "action": action, **details})

    def check_invariants(self) -> None:
        """Verdict consistency and the password disclosure order."""
        if self.verdict not in VERDICTS:
            raise AssertionError(f"bad verdict {self.verdict!r}")
        if self.verdict == "delivered" and self.bob_output is None:
            raise AssertionError("delivered run without Bob's output")
        kinds = [r.kind for r in self.classical_log]
        if "mask" in kinds:
            if "arrival-report" not in kinds or kinds.index("mask") < kinds.index("arrival-report"):
                raise AssertionError("mask disclosed before Bob's arrival report")
        if "key" in kinds:
            if self.verdict != "delivered":
                raise AssertionError("key disclosed in an aborted run")
            if "signature-confirmed" not in kinds or kinds.index("key") < kinds.index("signature-confirmed"):
                raise AssertionError("key disclosed before signature confirmation")

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "seed": self.seed,
            "trial": self.trial,
            "verdict": self.verdict,
            "bob_fidelity": self.bob_fidelity,
            "steps": self.steps,
            "classical_log": [r.to_dict() for r in self.classical_log],
            "eve_knowledge": self.eve_knowledge,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _swap_hook(mask: BasisMask, fake: QuantumState, stash: dict):
    """Eve's move once the mask is public: keep the real payload, forward a fake with the genuine signature."""

    def hook(c: Ciphertext) -> Ciphertext:
        n = c.n_pairs
        st = decrypt_unmask(c, mask)
        q_pos = [2 * k for k in range(n)]
        s_pos = [2 * k + 1 for k in range(n)]
        kept = partial_trace(st, q_pos)
        sigs = partial_trace(st, s_pos)
        if st.is_vector:
            kept, sigs = QuantumState(kept.pure_vector()), QuantumState(sigs.pure_vector())
        stash["held"] = kept
        payload = fake if kept.is_vector else fake.to_density()
        forged = interleave(payload, sigs if kept.is_vector else sigs.to_density())
        return Ciphertext(apply_basis_mask(entangle_pairs(forged), mask))

    return hook


def _reconstruct(eve: EveMemory, stash: dict, mask: BasisMask | None, key: PauliKey | None, n: int):
    """Eve applies every disclosed password to whatever she holds."""
    if key is None:
        return None
    if "held" in stash:
        return decrypt_final(stash["held"], key)
    if mask is not None and eve.held is not None and eve.held_positions == tuple(range(2 * n)):
        st = decrypt_unmask(eve.held, mask)
        q = partial_trace(st, [2 * k for k in range(n)])
        return decrypt_final(q, key)
    return None


def _fid(psi: QuantumState, other: QuantumState | None) -> float | None:
    if other is None or not psi.is_pure():
        return None
    return fidelity(psi if psi.is_vector else QuantumState(psi.pure_vector()), other)


def run_protocol(psi: QuantumState, config: ProtocolConfig) -> Transcript:
    """Execute the six protocol steps and return the full transcript."""
    n = config.n_qubits
    if psi.n_qubits != n:
        raise QuantumError(f"payload has {psi.n_qubits} qubits, config says {n}")
    rng = protocol_rng(config.seed, config.trial)
    tr = Transcript(n, config.seed, config.trial)
    cc = ClassicalChannel()
    qc = QuantumChannel()
    eve = EveMemory()
    stash: dict = {}

    # step 1: Alice encrypts and sends
    key = sample_pauli_key(n, rng)
    sig = config.signature or sample_signature(n, rng)
    mask = sample_basis_mask(n, rng)
    qc.send(encrypt(psi, key, sig, mask))
    tr.event(1, "alice", "send-ciphertext", qubits=2 * n)
    if config.adversary is not None and config.adversary.variant != "none":
        def attack(c):
            out, mem = apply_attack(c, config.adversary, rng, mode=config.attack_mode)
            eve.outcomes, eve.held, eve.held_positions = mem.outcomes, mem.held, mem.held_positions
            return out

        qc.intercept(attack)
        tr.event(1, "eve", "intercept", variant=config.adversary.variant, mode=config.attack_mode)
    if config.eve_removes:
        removed = frozenset(q for k in config.eve_removes for q in (2 * k, 2 * k + 1))
        qc.intercept(lambda c: Ciphertext(c.state, c.missing | removed))
        tr.event(1, "eve", "remove-qubits", positions=sorted(removed))

    def eve_swap_attempt(step: int) -> None:
        if not config.eve_swap:
            return
        fake = config.eve_fake or QuantumState.basis([0] * n)
        try:
            qc.intercept(_swap_hook(BasisMask.from_hex(cc.last("mask").get("mask"), n), fake, stash))
            tr.event(step, "eve", "swap-payload")
        except ChannelClosedError:
            tr.event(step, "eve", "swap-rejected", reason="channel closed")

    # optional misbehaviour: Bob reports arrival before the qubits are in his hands
    if config.bob_reports_early:
        cc.post("bob", "arrival-report", early=True)
        tr.event(2, "bob", "report-arrival", early=True)
        cc.post("alice", "mask", mask=mask.to_hex())
        tr.event(3, "alice", "disclose-mask")
        eve_swap_attempt(3)

    # step 2: Bob checks arrival, takes the qubits and closes the channel
    flags = arrival_check(qc)
    received = qc.receive()
    qc.close()
    tr.event(2, "bob", "arrival-check", present=sum(flags), expected=2 * n)
    if not all(flags):
        cc.post("bob", "arrival-failed", missing=[q for q, f in enumerate(flags) if not f])
        tr.verdict = "aborted-arrival"
        return _finish(tr, cc, eve, stash, psi, None, None)
    if not config.bob_reports_early:
        cc.post("bob", "arrival-report", early=False)
        tr.event(2, "bob", "report-arrival", early=False)
        # step 3: Alice discloses the mask
        cc.post("alice", "mask", mask=mask.to_hex())
        tr.event(3, "alice", "disclose-mask")
        eve_swap_attempt(3)

    # step 4: Bob unmasks and measures the signature
    bob_mask = BasisMask.from_hex(cc.last("mask").get("mask"), n)
    check = verify_signature(decrypt_unmask(received, bob_mask), sig, rng)
    cc.post("bob", "signature-bits", bits="".join(map(str, check.bits)))
    tr.event(4, "bob", "measure-signature", pass_probability=check.pass_probability)

    # step 5: Alice compares
    if check.bits != sig.bits:
        cc.post("alice", "signature-mismatch")
        tr.event(5, "alice", "abort")
        tr.verdict = "aborted-signature-mismatch"
        tr.bob_output = check.q_state  # retained for analysis only
        return _finish(tr, cc, eve, stash, psi, bob_mask, None)
    cc.post("alice", "signature-confirmed")
    cc.post("alice", "key", key=key.to_hex())
    tr.event(5, "alice", "disclose-key")

    # step 6: Bob removes the Pauli mask
    bob_key = PauliKey.from_hex(cc.last("key").get("key"), n)
    tr.bob_output = decrypt_final(check.q_state, bob_key)
    tr.event(6, "bob", "decrypt")
    tr.verdict = "delivered"
    tr.bob_fidelity = _fid(psi, tr.bob_output)
    return _finish(tr, cc, eve, stash, psi, bob_mask, bob_key)


def _finish(tr, cc, eve, stash, psi, mask, key) -> Transcript:
    n = tr.n_qubits
    # Eve reads the public log, not Alice's private variables
    rec_mask = cc.last("mask")
    rec_key = cc.last("key")
    seen_mask = BasisMask.from_hex(rec_mask.get("mask"), n) if rec_mask else None
    seen_key = PauliKey.from_hex(rec_key.get("key"), n) if rec_key else None
    guess = _reconstruct(eve, stash, seen_mask, seen_key, n)
    tr.eve_knowledge = {
        **eve.to_dict(),
        "mask_seen": seen_mask is not None,
        "key_seen": seen_key is not None,
        "holds_payload": "held" in stash,
        "reconstruction_fidelity": _fid(psi, guess),
    }
    tr.eve_state = guess
    tr.classical_log = cc.log
    tr.check_invariants()
    return tr


def premature_disclosure_scenario(
    psi: QuantumState,
    rng: np.random.Generator | int = 0,
    bob_reports_early: bool = True,
    fake: QuantumState | None = None,
) -> Transcript:
    """Bob reports arrival while the ciphertext is still on the channel and Eve swaps the payload.

    With ``bob_reports_early=False`` Eve's swap comes after Bob closed the
    channel and is rejected.
    """
    seed = int(rng.integers(2**63)) if isinstance(rng, np.random.Generator) else int(rng)
    cfg = ProtocolConfig(psi.n_qubits, seed=seed, bob_reports_early=bob_reports_early, eve_swap=True, eve_fake=fake)
    return run_protocol(psi, cfg)
