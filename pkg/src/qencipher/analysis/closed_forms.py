"""Closed-form pass probabilities for intercept/resend attacks."""
from __future__ import annotations

import numpy as np

from ..qcore import BlochVector, QuantumError


def _check_unit(*vs: BlochVector) -> None:
    for v in vs:
        if abs(v.norm - 1) > 1e-10:
            raise QuantumError(f"Bloch vector norm {v.norm} != 1")


def pb_single_side(X: BlochVector, Xp: BlochVector) -> float:
    """(2 + X_x X'_x + X_z X'_z) / 4 for measuring along X and resending along X'."""
    _check_unit(X, Xp)
    return (2 + X.x * Xp.x + X.z * Xp.z) / 4


def pair_kernel_entries(x1, x2, x3, x4) -> tuple[float, float]:
    """(d, h) with K = [[d, h], [h, d]] the pass operator on the payload qubit.

    For a payload density matrix rho the pass probability is Tr(rho K):
    d = 1/2 + g/8, h = -Y1 Y2 (Z3 - X3)(Z4 - X4) / 8.
    """
    g = (x1.x * x3.x + x1.z * x3.z) * (x2.x * x4.x + x2.z * x4.z)
    h = -x1.y * x2.y * (x3.z - x3.x) * (x4.z - x4.x) / 8
    return 0.5 + g / 8, h


def pair_kernel(x1, x2, x3, x4) -> np.ndarray:
    d, h = pair_kernel_entries(x1, x2, x3, x4)
    return np.array([[d, h], [h, d]])


def pb_pair(alpha: complex, beta: complex, x1, x2, x3, x4) -> float:
    """1/2 + (X1X3+Z1Z3)(X2X4+Z2Z4)/8 - (a b* + a* b) Y1 Y2 (Z3-X3)(Z4-X4)/8.

    ``alpha``, ``beta`` are the payload amplitudes entering the signature stage;
    X1/X3 measure/resend on Q and X2/X4 on S.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-10:
        raise QuantumError("payload amplitudes are not normalised")
    _check_unit(x1, x2, x3, x4)
    d, h = pair_kernel_entries(x1, x2, x3, x4)
    return float(d + h * 2 * (alpha * np.conj(beta)).real)


def pb_pair_density(rho: np.ndarray, x1, x2, x3, x4) -> float:
    """The pair closed form for a mixed payload qubit: Tr(rho K)."""
    return float(np.trace(np.asarray(rho) @ pair_kernel(x1, x2, x3, x4)).real)


def f_value(x1, x2, x3, x4) -> float:
    """(X1X3+Z1Z3)(X2X4+Z2Z4) + Y1Y2(X3+Z3)(X4+Z4) on the non-negative octant."""
    _check_unit(x1, x2, x3, x4)
    if any(c < -1e-12 for v in (x1, x2, x3, x4) for c in v):
        raise ValueError("f is defined on Bloch vectors with non-negative components")
    return (x1.x * x3.x + x1.z * x3.z) * (x2.x * x4.x + x2.z * x4.z) + x1.y * x2.y * (x3.x + x3.z) * (
        x4.x + x4.z
    )


def ab_vectors(x1, x2, x3, x4) -> tuple[np.ndarray, np.ndarray]:
    """Two-component vectors with f = A . B."""
    a = np.array([x1.x * x3.x + x1.z * x3.z, x1.y * (x3.x + x3.z)])
    b = np.array([x2.x * x4.x + x2.z * x4.z, x2.y * (x4.x + x4.z)])
    return a, b


def pb_entangled_closed_form(rho: np.ndarray, kernels_per_pair) -> float:
    """sum rho_{(ij),(i'j')} K_{ii'} K'_{jj'} ... = Tr(rho (K (x) K' (x) ...))."""
    k = np.ones((1, 1))
    for kk in kernels_per_pair:
        k = np.kron(k, kk)
    rho = np.asarray(rho)
    if rho.ndim == 1:
        return float(np.vdot(rho, k @ rho).real)
    return float(np.trace(rho @ k).real)
