"""The comparison scheme: Pauli-encrypted payload plus randomly placed check qubits.

Alice Pauli-encrypts n payload qubits, adds n check qubits each drawn from
{|0>, |1>, |+>, |->}, and shuffles all 2n positions. Eve intercepts and
resends one position chosen uniformly at random. Bob and Alice compare only
the check qubits, so Eve escapes for sure on a payload position and with
the BB84-style probability on a check position.
"""
from __future__ import annotations

import numpy as np

from ..attacks import InterceptResendMap
from ..qcore import H, ZAXIS

CHECK_STATES = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    H @ np.array([1, 0], dtype=complex),
    H @ np.array([0, 1], dtype=complex),
)


def check_survival(ir: InterceptResendMap) -> float:
    """Average over the four check states of <c| $(|c><c|) |c>."""
    total = 0.0
    for c in CHECK_STATES:
        rho = np.outer(c, c.conj())
        out = sum(k @ rho @ k.conj().T for k in ir.kraus())
        total += np.vdot(c, out @ c).real
    return total / len(CHECK_STATES)


def baseline_check_scheme(
    n: int,
    rng: np.random.Generator | None = None,
    target: str = "random",
    ir: InterceptResendMap | None = None,
) -> float:
    """Exact probability that Eve's one-qubit intercept/resend goes unnoticed.

    ``target`` is "random" (uniform over all 2n shuffled positions), "check" or
    "payload". ``rng`` draws one concrete layout (check states and shuffle);
    the returned value is exact and the same for every layout.
    """
    if n < 1:
        raise ValueError("need at least one payload qubit")
    if target not in ("random", "check", "payload"):
        raise ValueError(f"unknown target {target!r}")
    ir = ir or InterceptResendMap(ZAXIS, ZAXIS)
    rng = rng or np.random.default_rng(0)
    is_check = np.array([False] * n + [True] * n)[rng.permutation(2 * n)]
    survive_check = check_survival(ir)
    if target == "check":
        return survive_check
    if target == "payload":
        return 1.0
    per_position = np.where(is_check, survive_check, 1.0)
    return float(per_position.mean())


def baseline_check_sample(n: int, rng: np.random.Generator, ir: InterceptResendMap | None = None) -> bool:
    """One sampled run: returns True when Eve goes unnoticed."""
    ir = ir or InterceptResendMap(ZAXIS, ZAXIS)
    is_check = np.array([False] * n + [True] * n)[rng.permutation(2 * n)]
    pos = rng.integers(2 * n)
    if not is_check[pos]:
        return True
    c = CHECK_STATES[rng.integers(4)]
    m0, m1 = ir.projectors
    outcome = int(rng.random() >= np.vdot(c, m0 @ c).real)
    resent = ir.resend_states[outcome]
    return bool(rng.random() < np.vdot(c, resent @ c).real)
