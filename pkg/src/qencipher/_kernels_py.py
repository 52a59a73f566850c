"""Reference (numpy) implementations of the hot loops.

``_speedups.pyx`` mirrors these functions one for one; results must agree to
rounding error and both backends enumerate probe words in the same order.

Probe search
    Wires are big-endian; wires 0 and 1 are the attacked (Q, S) pair and any
    further wires are Eve's ancillas. A gate is ``(kind, q0, q1, 2x2 matrix)``
    with kind 0 a one-wire unitary on ``q0`` and kind 1 a CNOT ``q0 -> q1``.
    For every gate word the score is
    ``sum_k w_k sum_r || (<proj_kr| (x) I_env) out_k ||^2``.

Trajectory VM
    ``ops[k] = (opcode, a, b)`` with opcodes

    * GATE1: 2x2 matrix ``mats[idx]`` on qubit ``a``
    * GATE2: 4x4 matrix ``mats[idx]`` on qubits ``(a, b)``
    * MEASURE: computational measurement of ``a``, outcome recorded
    * COND1: ``mats[idx + outcome of op b]`` on qubit ``a``
    * RESET: measure ``a`` (recorded) and flip it back to ``|0>``

    ``idx`` is per trial (``mat_idx[t, k]``); a measurement returns 1 iff the
    supplied uniform is below the probability of 1.
"""
from __future__ import annotations

import numpy as np

GATE1, GATE2, MEASURE, COND1, RESET = range(5)


def _gate_full(kind: int, a: int, b: int, m: np.ndarray, n_wires: int) -> np.ndarray:
    dim = 1 << n_wires
    if kind == 0:
        out = np.ones((1, 1), dtype=complex)
        for q in range(n_wires):
            out = np.kron(out, m if q == a else np.eye(2))
        return out
    out = np.zeros((dim, dim), dtype=complex)
    ma, mb = 1 << (n_wires - 1 - a), 1 << (n_wires - 1 - b)
    for i in range(dim):
        out[i ^ mb if i & ma else i, i] = 1
    return out


def probe_dfs(kinds, q0, q1, mats, n_wires, max_len, no_repeat, init, proj, weights, n_words):
    n_gates = len(kinds)
    dim = init.shape[1]
    env = dim // 4
    words = np.full((n_words, max(max_len, 1)), -1, dtype=np.int32)
    values = np.zeros(n_words)
    if n_gates == 0 or max_len == 0:
        return words[:0], values[:0]
    full = np.stack([_gate_full(kinds[g], q0[g], q1[g], mats[g], n_wires) for g in range(n_gates)])
    pc = proj.conj().reshape(proj.shape[0], proj.shape[1], 4)
    w = np.asarray(weights)
    row = 0
    prefix = []

    def expand(states):
        nonlocal row
        # children[g, k, :] = full[g] @ states[k, :]
        children = np.einsum("gij,kj->gki", full, states)
        amps = np.einsum("krp,gkpe->gkre", pc, children.reshape(n_gates, -1, 4, env))
        scores = np.einsum("k,gkre->g", w, np.abs(amps) ** 2)
        last = prefix[-1] if prefix else -1
        for g in range(n_gates):
            if no_repeat and g == last:
                continue
            prefix.append(g)
            words[row, : len(prefix)] = prefix
            values[row] = scores[g]
            row += 1
            if len(prefix) < max_len:
                expand(children[g])
            prefix.pop()

    expand(np.asarray(init, dtype=complex))
    return words, values


def _apply_batched(states: np.ndarray, mats: np.ndarray, qubits: list[int], n: int) -> np.ndarray:
    t = states.shape[0]
    k = len(qubits)
    psi = states.reshape((t,) + (2,) * n)
    axes = [1 + q for q in qubits]
    psi = np.moveaxis(psi, axes, list(range(n + 1 - k, n + 1)))
    shape = psi.shape
    psi = psi.reshape(t, -1, 1 << k)
    psi = np.einsum("tij,tpj->tpi", mats, psi)
    psi = np.moveaxis(psi.reshape(shape), list(range(n + 1 - k, n + 1)), axes)
    return psi.reshape(t, -1)


def _measure_batched(states: np.ndarray, a: int, n: int, u: np.ndarray):
    t = states.shape[0]
    psi = states.reshape(t, 1 << a, 2, -1)
    p1 = np.sum(np.abs(psi[:, :, 1, :]) ** 2, axis=(1, 2))
    outcome = (u < p1).astype(np.int8)
    keep = np.where(outcome == 1, p1, 1.0 - p1)
    keep = np.sqrt(np.where(keep > 0, keep, 1.0))
    psi = psi / keep[:, None, None, None]
    psi[outcome == 1, :, 0, :] = 0
    psi[outcome == 0, :, 1, :] = 0
    return psi.reshape(t, -1), outcome


def run_trajectories(ops, mat_idx, mats, psi0, uniforms):
    ops = np.asarray(ops)
    n_trials, n_ops = mat_idx.shape
    dim = psi0.shape[0]
    n = dim.bit_length() - 1
    out = np.full((n_trials, n_ops), -1, dtype=np.int8)
    states = np.tile(np.asarray(psi0, dtype=complex), (n_trials, 1))
    for k in range(n_ops):
        op, a, b = (int(v) for v in ops[k])
        if op == GATE1:
            states = _apply_batched(states, mats[mat_idx[:, k], :2, :2], [a], n)
        elif op == COND1:
            states = _apply_batched(states, mats[mat_idx[:, k] + out[:, b], :2, :2], [a], n)
        elif op == GATE2:
            states = _apply_batched(states, mats[mat_idx[:, k]], [a, b], n)
        elif op in (MEASURE, RESET):
            states, outcome = _measure_batched(states, a, n, uniforms[:, k])
            out[:, k] = outcome
            if op == RESET:
                psi = states.reshape(n_trials, 1 << a, 2, -1)
                flip = outcome == 1
                psi[flip, :, 0, :] = psi[flip, :, 1, :]
                psi[flip, :, 1, :] = 0
                states = psi.reshape(n_trials, -1)
        else:
            raise ValueError(f"unknown opcode {op}")
    return out
