"""Backend selection for the hot loops.

The compiled ``_speedups`` extension is used when it was built; otherwise (or
when ``QENCIPHER_PURE_PYTHON=1``) the numpy reference in ``_kernels_py`` is
used. Both expose ``probe_dfs`` and ``run_trajectories`` with identical
semantics; the wrappers here normalise dtypes so callers never care which one
is active.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from ._kernels_py import COND1, GATE1, GATE2, MEASURE, RESET  # noqa: F401

try:
    if os.environ.get("QENCIPHER_PURE_PYTHON", "") == "1":
        raise ImportError("pure-Python backend forced")
    from . import _speedups as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _buf(a, dtype=None):
    """C-contiguous, writeable array (the compiled kernels take plain typed memoryviews)."""
    return np.require(a, dtype=dtype, requirements=["C", "W"])


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ("cython", "python" or None for the default)."""
    if name is None:
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled extension qencipher._speedups is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def count_words(n_gates: int, max_len: int, no_repeat: bool) -> int:
    if n_gates == 0:
        return 0
    branch = n_gates - 1 if no_repeat else n_gates
    return sum(n_gates * branch ** (length - 1) for length in range(1, max_len + 1))


def probe_dfs(kinds, q0, q1, mats, n_wires, max_len, no_repeat, init, proj, weights, backend=None):
    """Score every gate word up to ``max_len`` in depth-first pre-order.

    Returns ``(words, values)`` with words padded by -1.
    """
    mod = get_backend(backend)
    n_words = count_words(len(kinds), max_len, no_repeat)
    return mod.probe_dfs(
        _buf(kinds, dtype=np.int32),
        _buf(q0, dtype=np.int32),
        _buf(q1, dtype=np.int32),
        _buf(mats, dtype=np.complex128).reshape(-1, 2, 2),
        int(n_wires),
        int(max_len),
        bool(no_repeat),
        _buf(init, dtype=np.complex128),
        _buf(proj, dtype=np.complex128),
        _buf(weights, dtype=np.float64),
        n_words,
    )


def run_trajectories(ops, mat_idx, mats, psi0, uniforms, backend=None):
    """Run one pure-state trajectory per row of ``mat_idx``; returns recorded outcomes (-1 where none)."""
    mod = get_backend(backend)
    mats = np.asarray(mats, dtype=np.complex128)
    if mats.shape[1:] == (2, 2):
        padded = np.zeros((mats.shape[0], 4, 4), dtype=np.complex128)
        padded[:, :2, :2] = mats
        mats = padded
    return mod.run_trajectories(
        _buf(ops, dtype=np.int32).reshape(-1, 3),
        _buf(mat_idx, dtype=np.int32),
        _buf(mats),
        _buf(psi0, dtype=np.complex128),
        _buf(uniforms, dtype=np.float64),
    )
