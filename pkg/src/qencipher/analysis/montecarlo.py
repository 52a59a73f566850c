"""Monte Carlo estimates of pass probabilities.

Two engines:

* ``kernel`` compiles the whole run (encryption, Eve, Bob's check) into a
  small opcode program and samples trajectories in bulk with the compiled
  kernel (or its numpy fallback);
* ``protocol`` runs the full protocol state machine once per trial.

Both are deterministic given the seed.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels
from ..attacks import AttackSpec, InterceptResendMap, basis_unitary
from ..cipher import MASK_MATRICES, MASK_OPS, Signature, interleave
from ..qcore import CNOT, PAULIS, QuantumError, QuantumState
from .baseline import CHECK_STATES
from .exact import PassProbabilityReport, pb_exact

PAULI = 0
MASK = 4
MASK_DAG = 8
CNOT_IDX = 12
DEFAULT_BATCH = 50_000


class TrajectoryProgram:
    """Builder for the trajectory kernel: a fixed op list with per-trial matrix choices."""

    def __init__(self, n_qubits: int, trials: int):
        self.n_qubits = n_qubits
        self.trials = trials
        self.ops: list[tuple[int, int, int]] = []
        self.cols: list[np.ndarray] = []
        self._mats: list[np.ndarray] = []
        self.add_mats([PAULIS[s] for s in "0xyz"])
        self.add_mats([MASK_MATRICES[o] for o in MASK_OPS])
        self.add_mats([MASK_MATRICES[o].conj().T for o in MASK_OPS])
        self.add_mats([CNOT])

    def add_mats(self, mats) -> int:
        base = sum(len(m) for m in self._mats)
        block = np.zeros((len(mats), 4, 4), dtype=complex)
        for i, m in enumerate(mats):
            m = np.asarray(m)
            block[i, : m.shape[0], : m.shape[1]] = m
        self._mats.append(block)
        return base

    def _push(self, op: int, a: int, b: int, idx) -> int:
        self.ops.append((op, a, b))
        self.cols.append(np.broadcast_to(np.asarray(idx, dtype=np.int32), (self.trials,)))
        return len(self.ops) - 1

    def gate1(self, q: int, idx) -> int:
        return self._push(kernels.GATE1, q, 0, idx)

    def gate2(self, a: int, b: int, idx) -> int:
        return self._push(kernels.GATE2, a, b, idx)

    def measure(self, q: int) -> int:
        return self._push(kernels.MEASURE, q, 0, 0)

    def reset(self, q: int) -> int:
        return self._push(kernels.RESET, q, 0, 0)

    def run(self, psi0: np.ndarray, rng: np.random.Generator, backend=None) -> np.ndarray:
        mat_idx = np.stack(self.cols, axis=1) if self.cols else np.zeros((self.trials, 0), np.int32)
        uniforms = rng.random((self.trials, len(self.ops)))
        mats = np.concatenate(self._mats)
        return kernels.run_trajectories(np.array(self.ops, dtype=np.int32), mat_idx, mats, psi0, uniforms, backend)


def encrypt_ops(prog: TrajectoryProgram, pairs, key_idx, sig_bits, mask_idx) -> None:
    for k, (q, s) in enumerate(pairs):
        if key_idx is not None:
            prog.gate1(q, PAULI + key_idx[:, k])
        prog.gate1(s, PAULI + sig_bits[:, k])  # Pauli 0 or x prepares |a>
        prog.gate2(q, s, CNOT_IDX)
        prog.gate1(q, MASK + mask_idx[:, 2 * k])
        prog.gate1(s, MASK + mask_idx[:, 2 * k + 1])


def decrypt_ops(prog: TrajectoryProgram, pairs, key_idx, mask_idx) -> list[int]:
    meas = []
    for k, (q, s) in enumerate(pairs):
        prog.gate1(q, MASK_DAG + mask_idx[:, 2 * k])
        prog.gate1(s, MASK_DAG + mask_idx[:, 2 * k + 1])
        prog.gate2(q, s, CNOT_IDX)
        meas.append(prog.measure(s))
        if key_idx is not None:
            prog.gate1(q, PAULI + key_idx[:, k])  # Paulis are self-inverse up to phase
    return meas


def attack_ops(prog: TrajectoryProgram, spec: AttackSpec, pair: tuple[int, int], ancillas: Sequence[int], rng) -> None:
    q, s = pair
    if spec.variant == "none":
        return
    if spec.variant in ("ir_single", "ir_pair"):
        if spec.variant == "ir_single":
            maps = [(q if spec.side == "Q" else s, InterceptResendMap(*spec.vectors))]
        else:
            x1, x2, x3, x4 = spec.vectors
            maps = [(q, InterceptResendMap(x1, x3)), (s, InterceptResendMap(x2, x4))]
        for wire, m in maps:
            base = prog.add_mats([basis_unitary(m.measure).conj().T, basis_unitary(m.resend)])
            prog.gate1(wire, base)
            prog.measure(wire)
            prog.gate1(wire, base + 1)
        return
    if spec.variant == "replace_random":
        for wire in (q, s):
            prog.reset(wire)
            base = prog.add_mats(_haar_unitaries(rng, prog.trials))
            prog.gate1(wire, base + np.arange(prog.trials))
        return
    if spec.variant == "probe_circuit":
        wires = [q, s] + list(ancillas)
        for g in spec.gates:
            if len(g.wires) > 2:
                raise ValueError("trajectory engine supports probe gates on at most two wires")
            idx = prog.add_mats([g.matrix])
            if len(g.wires) == 1:
                prog.gate1(wires[g.wires[0]], idx)
            else:
                prog.gate2(wires[g.wires[0]], wires[g.wires[1]], idx)
        return
    raise ValueError(spec.variant)


def _haar_kets(rng, trials: int) -> np.ndarray:
    """Vectorised Haar-random qubits (same construction as qcore.haar_qubit)."""
    cos_t = rng.uniform(-1.0, 1.0, size=trials)
    phi = rng.uniform(0.0, 2 * np.pi, size=trials)
    return np.stack([np.sqrt((1 + cos_t) / 2), np.exp(1j * phi) * np.sqrt((1 - cos_t) / 2)], axis=1)


def _haar_unitaries(rng, trials: int) -> np.ndarray:
    a, b = _haar_kets(rng, trials).T
    return np.stack([np.stack([a, -b.conj()], -1), np.stack([b, a.conj()], -1)], 1)


def _pass_rate(outcomes: np.ndarray, meas_ops: list[int], sig_bits: np.ndarray) -> np.ndarray:
    got = outcomes[:, meas_ops]
    return np.all(got == sig_bits, axis=1)


def _mean_se(hits: np.ndarray) -> tuple[float, float]:
    t = len(hits)
    p = float(np.mean(hits))
    se = float(np.sqrt(p * (1 - p) / (t - 1))) if t > 1 else 0.0
    return p, se


def _sample_passwords(rng, trials: int, n: int, sig: Signature | None, random_key: bool):
    key_idx = rng.integers(0, 4, size=(trials, n)) if random_key else None
    if sig is None:
        sig_bits = rng.integers(0, 2, size=(trials, n))
    else:
        sig_bits = np.broadcast_to(np.array(sig.bits), (trials, n)).copy()
    mask_idx = rng.integers(0, 4, size=(trials, 2 * n))
    return key_idx, sig_bits, mask_idx


def kernel_pass_hits(
    payload: QuantumState, sig: Signature | None, spec: AttackSpec, trials: int, rng, random_key=False, backend=None
) -> np.ndarray:
    """Boolean pass flag per sampled run, from the trajectory kernel."""
    if not payload.is_vector:
        raise QuantumError("the trajectory engine needs a pure payload")
    n = payload.n_qubits
    targets = spec.targets(n)
    n_anc = spec.n_ancillas if spec.variant == "probe_circuit" else 0
    width = 2 * n + n_anc * len(targets)
    prog = TrajectoryProgram(width, trials)
    key_idx, sig_bits, mask_idx = _sample_passwords(rng, trials, n, sig, random_key)
    pairs = [(2 * k, 2 * k + 1) for k in range(n)]
    encrypt_ops(prog, pairs, key_idx, sig_bits, mask_idx)
    for j, k in enumerate(targets):
        anc = [2 * n + j * n_anc + i for i in range(n_anc)]
        attack_ops(prog, spec, pairs[k], anc, rng)
    meas = decrypt_ops(prog, pairs, key_idx, mask_idx)
    psi0 = interleave(payload, QuantumState.basis([0] * n)).data
    if n_anc:
        psi0 = np.kron(psi0, QuantumState.basis([0] * (n_anc * len(targets))).data)
    out = prog.run(psi0, rng, backend)
    return _pass_rate(out, meas, sig_bits)


def protocol_pass_hits(payload: QuantumState, sig: Signature | None, spec: AttackSpec, trials: int, seed: int) -> np.ndarray:
    from ..protocol import ProtocolConfig, run_protocol

    hits = np.zeros(trials, dtype=bool)
    for i in range(trials):
        cfg = ProtocolConfig(payload.n_qubits, seed=seed, trial=i, adversary=spec, attack_mode="trajectory", signature=sig)
        hits[i] = run_protocol(payload, cfg).verdict == "delivered"
    return hits


def mc_estimate(
    payload: QuantumState,
    sig: Signature | None,
    spec: AttackSpec,
    trials: int,
    seed: int,
    engine: str = "kernel",
    random_key: bool | None = None,
    backend: str | None = None,
    batch: int = DEFAULT_BATCH,
) -> PassProbabilityReport:
    """Sampled pass probability with its exact counterpart attached.

    The protocol engine always draws a random Pauli key; the kernel engine
    does so only with ``random_key=True``. The exact value is averaged the
    same way.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if engine == "protocol":
        random_key = True
        hits = protocol_pass_hits(payload, sig, spec, trials, seed)
    elif engine == "kernel":
        random_key = bool(random_key)
        rng = np.random.default_rng(seed)
        chunks = []
        left = trials
        while left > 0:
            t = min(batch, left)
            chunks.append(kernel_pass_hits(payload, sig, spec, t, rng, random_key, backend))
            left -= t
        hits = np.concatenate(chunks)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    report = pb_exact(payload, sig, spec, average_keys=random_key)
    mean, se = _mean_se(hits)
    report.mc_estimate = (mean, se, trials)
    report.details["engine"] = engine
    return report


def chain_layout(levels: int) -> list[list[tuple[int, int]]]:
    """Physical (Q, S) wire pairs of every level, innermost first."""
    wires = list(range(1 << levels))
    per_level = []
    for _ in range(levels):
        per_level.append([(wires[2 * k], wires[2 * k + 1]) for k in range(len(wires) // 2)])
        wires = wires[0::2]
    return per_level[::-1]


def mc_chain(psi1: QuantumState, levels: int, spec: AttackSpec, trials: int, seed: int, backend=None) -> tuple[float, float]:
    """Sampled pass probability of every signature check in an iterated encryption."""
    if not psi1.is_vector or psi1.n_qubits != 1:
        raise QuantumError("chain sampling needs a pure one-qubit payload")
    if spec.variant == "probe_circuit":
        raise ValueError("probe circuits are not supported for chains")
    rng = np.random.default_rng(seed)
    layout = chain_layout(levels)
    prog = TrajectoryProgram(1 << levels, trials)
    secrets = []
    for pairs in layout:
        n = len(pairs)
        key_idx, sig_bits, mask_idx = _sample_passwords(rng, trials, n, None, True)
        encrypt_ops(prog, pairs, key_idx, sig_bits, mask_idx)
        secrets.append((pairs, key_idx, sig_bits, mask_idx))
    for pair in layout[-1]:
        attack_ops(prog, spec, pair, [], rng)
    checks = []
    for pairs, key_idx, sig_bits, mask_idx in reversed(secrets):
        checks.append((decrypt_ops(prog, pairs, key_idx, mask_idx), sig_bits))
    psi0 = np.kron(psi1.data, QuantumState.basis([0] * ((1 << levels) - 1)).data)
    out = prog.run(psi0, rng, backend)
    hits = np.ones(trials, dtype=bool)
    for meas, bits in checks:
        hits &= _pass_rate(out, meas, bits)
    return _mean_se(hits)


def mc_baseline(n: int, trials: int, seed: int, ir: InterceptResendMap | None = None) -> tuple[float, float]:
    """Sampled escape probability in the check-qubit comparison scheme (vectorised)."""
    ir = ir or InterceptResendMap()
    rng = np.random.default_rng(seed)
    # position of Eve's target within a fresh shuffle: a check with probability n / 2n
    is_check = rng.permutation(np.tile(np.r_[np.zeros(n, bool), np.ones(n, bool)], (trials, 1)), axis=1)[
        np.arange(trials), rng.integers(0, 2 * n, size=trials)
    ]
    cs = np.array(CHECK_STATES)[rng.integers(0, 4, size=trials)]
    m0 = ir.projectors[0]
    p0 = np.einsum("ti,ij,tj->t", cs.conj(), m0, cs).real
    outcome = (rng.random(trials) >= p0).astype(int)
    resent = np.array(ir.resend_states)[outcome]
    p_ok = np.einsum("ti,tij,tj->t", cs.conj(), resent, cs).real
    ok = rng.random(trials) < p_ok
    hits = np.where(is_check, ok, True)
    return _mean_se(hits)


def blind_eve_fidelity(trials: int, seed: int, guess="zero", return_stderr: bool = False):
    """Mean fidelity between a Haar-random payload qubit and Eve's guess.

    ``guess`` is "zero" (|0>), "mixed" (I/2), "oracle" (the payload itself)
    or any one-qubit QuantumState.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    psi = _haar_kets(rng, trials)
    if isinstance(guess, str) and guess == "oracle":
        fid = np.ones(trials)
    else:
        if isinstance(guess, str):
            rho = {"zero": np.diag([1.0, 0.0]), "mixed": np.eye(2) / 2}[guess]
        else:
            rho = guess.density()
        fid = np.einsum("ti,ij,tj->t", psi.conj(), rho, psi).real
    mean = float(fid.mean())
    if return_stderr:
        return mean, float(fid.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return mean
