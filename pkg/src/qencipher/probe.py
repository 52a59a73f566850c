"""Exhaustive search over entangling-probe circuits on one pair.

Eve's probe acts on the pair ``(Q, S)`` plus her ancillas, all starting in
``|0>``. It is built from the Breidbart rotation ``U`` and CNOTs. For each
circuit we compute Bob's exact pass probability averaged over the 16 mask
pairs, both signature bits and the chosen classical payload bits.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .attacks import BREIDBART_U, ProbeGate, probe_gate_cnot, probe_gate_u, probe_unitary
from .cipher import MASK_MATRICES, MASK_OPS
from .qcore import CNOT

DEFAULT_CAP = 5_000_000


def wire_name(w: int) -> str:
    return {0: "Q", 1: "S"}.get(w, f"E{w - 1}")


def describe(gates: Sequence[ProbeGate]) -> str:
    """Readable topology string, e.g. ``U(E1) C(Q>E1) U(E1)``."""
    parts = []
    for g in gates:
        if len(g.wires) == 2 and np.allclose(g.matrix, CNOT):
            parts.append(f"C({wire_name(g.wires[0])}>{wire_name(g.wires[1])})")
        elif len(g.wires) == 1 and np.allclose(g.matrix, BREIDBART_U):
            parts.append(f"U({wire_name(g.wires[0])})")
        else:
            parts.append(f"{g.label or 'G'}({','.join(wire_name(w) for w in g.wires)})")
    return " ".join(parts)


def default_alphabet(n_ancillas: int) -> tuple[ProbeGate, ...]:
    """``U`` on every wire followed by a CNOT for every ordered pair of wires."""
    width = 2 + n_ancillas
    us = [probe_gate_u(w) for w in range(width)]
    cs = [probe_gate_cnot(a, b) for a, b in itertools.permutations(range(width), 2)]
    return tuple(us + cs)


@dataclass(frozen=True)
class ProbeFamily:
    """A set of probe topologies.

    Either every word over ``alphabet`` up to ``max_len`` gates (optionally
    forbidding the same gate twice in a row, which would cancel), or an
    explicit list of ``(name, gates)`` topologies.
    """

    n_ancillas: int = 1
    max_len: int = 6
    no_repeat: bool = True
    alphabet: tuple[ProbeGate, ...] = ()
    explicit: tuple[tuple[str, tuple[ProbeGate, ...]], ...] | None = None

    @classmethod
    def exhaustive(cls, n_ancillas: int = 1, max_len: int = 6, no_repeat: bool = True, alphabet=None):
        if n_ancillas < 0 or n_ancillas > 2:
            raise ValueError("at most 2 ancillas per pair")
        alpha = tuple(alphabet) if alphabet is not None else default_alphabet(n_ancillas)
        for g in alpha:
            cnot = len(g.wires) == 2 and np.allclose(g.matrix, CNOT)
            if not (len(g.wires) == 1 or cnot):
                raise ValueError("exhaustive alphabet supports one-wire gates and CNOTs only")
        return cls(n_ancillas, max_len, no_repeat, alpha, None)

    @classmethod
    def from_topologies(cls, topologies, n_ancillas: int):
        tops = tuple((str(name), tuple(gates)) for name, gates in topologies)
        return cls(n_ancillas, max((len(g) for _, g in tops), default=0), False, (), tops)

    @classmethod
    def empty(cls):
        return cls(0, 0, False, (), ())

    def size(self) -> int:
        if self.explicit is not None:
            return len(self.explicit)
        return kernels.count_words(len(self.alphabet), self.max_len, self.no_repeat)


def documented_family() -> ProbeFamily:
    """Named topologies recorded from the exhaustive search, plus the plain intercept/resend wiring.

    Wires: 0 = Q, 1 = S, 2 = E1, 3 = E2.
    """
    u, c = probe_gate_u, probe_gate_cnot
    tops = [
        ("ir-both-sides", (u(0), c(0, 2), u(0), u(1), c(1, 3), u(1))),
        ("ir-signature-side", (u(1), c(1, 2), u(1))),
        ("swap-rotate-11/16", (c(0, 1), u(0), c(1, 0), u(0), c(0, 1))),
        ("swap-rotate-4u-11/16", (c(0, 1), c(1, 0), u(0), u(1), c(1, 0))),
        ("ancilla-probe-13/16", (u(2), c(0, 2), u(2), c(2, 1), u(2), c(0, 2))),
        ("ancilla-probe-4u-13/16", (u(2), c(2, 0), u(2), c(0, 2), u(0), u(2), c(0, 2))),
    ]
    return ProbeFamily.from_topologies(tops, n_ancillas=2)


def _inputs(n_ancillas: int, payload_bits: Sequence[int]):
    """Initial states, pass-projector vectors and weights for all (x, a, L1, L2)."""
    anc = np.zeros(1 << n_ancillas)
    anc[0] = 1
    init, proj = [], []
    for x in payload_bits:
        for a in (0, 1):
            for l1, l2 in itertools.product(MASK_OPS, repeat=2):
                m1, m2 = MASK_MATRICES[l1], MASK_MATRICES[l2]
                init.append(np.kron(np.kron(m1[:, x], m2[:, x ^ a]), anc))
                proj.append([np.kron(m1[:, y], m2[:, y ^ a]) for y in (0, 1)])
    init = np.array(init, dtype=complex)
    weights = np.full(len(init), 1.0 / len(init))
    return init, np.array(proj, dtype=complex), weights


def evaluate_probe(gates: Sequence[ProbeGate], n_ancillas: int, payload_bits=(0, 1)) -> float:
    """Exact pass probability of one probe circuit by dense simulation."""
    init, proj, w = _inputs(n_ancillas, payload_bits)
    u = probe_unitary(gates, 2 + n_ancillas)
    out = init @ u.T
    env = 1 << n_ancillas
    amps = np.einsum("krp,kpe->kre", proj.conj(), out.reshape(len(out), 4, env))
    return float(np.einsum("k,kre->", w, np.abs(amps) ** 2))


@dataclass(frozen=True)
class ProbeResult:
    topology: str
    pass_probability: float
    gates: tuple[ProbeGate, ...]


class ProbeTable:
    """Search results held as arrays; rows are materialised on access."""

    def __init__(self, values, gate_words, names=None):
        self.values = np.asarray(values, dtype=float)
        self._words = gate_words
        self._names = names

    def __len__(self):
        return len(self.values)

    def gates(self, i: int) -> tuple[ProbeGate, ...]:
        return tuple(self._words[i])

    def __getitem__(self, i: int) -> ProbeResult:
        gates = self.gates(i)
        name = self._names[i] if self._names is not None else describe(gates)
        return ProbeResult(name, float(self.values[i]), gates)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def find(self, target: float, tol: float = 1e-9) -> list[ProbeResult]:
        return [self[int(i)] for i in np.flatnonzero(np.abs(self.values - target) <= tol)]

    def best(self) -> ProbeResult | None:
        return self[int(np.argmax(self.values))] if len(self) else None


class _WordView:
    def __init__(self, words: np.ndarray, alphabet):
        self.words, self.alphabet = words, alphabet

    def __getitem__(self, i):
        return [self.alphabet[j] for j in self.words[i] if j >= 0]


def probe_attack_search(
    family: ProbeFamily, payload_bits=(0, 1), cap: int = DEFAULT_CAP, backend: str | None = None
) -> ProbeTable:
    """Exact pass probability for every topology in ``family``.

    All values are exact, so no random stream is involved. Raises ValueError
    when the family holds more than ``cap`` topologies.
    """
    size = family.size()
    if size > cap:
        raise ValueError(f"probe family has {size} topologies, above the cap of {cap}")
    if family.explicit is not None:
        names = [f"{name}: {describe(g)}" if name else describe(g) for name, g in family.explicit]
        values = [evaluate_probe(g, family.n_ancillas, payload_bits) for _, g in family.explicit]
        return ProbeTable(values, [g for _, g in family.explicit], names)
    alpha = family.alphabet
    kinds = [0 if len(g.wires) == 1 else 1 for g in alpha]
    q0 = [g.wires[0] for g in alpha]
    q1 = [g.wires[1] if len(g.wires) == 2 else 0 for g in alpha]
    mats = np.array([g.matrix if len(g.wires) == 1 else np.eye(2) for g in alpha], dtype=complex)
    init, proj, w = _inputs(family.n_ancillas, payload_bits)
    words, values = kernels.probe_dfs(
        kinds, q0, q1, mats, 2 + family.n_ancillas, family.max_len, family.no_repeat, init, proj, w, backend=backend
    )
    return ProbeTable(values, _WordView(words, alpha))
