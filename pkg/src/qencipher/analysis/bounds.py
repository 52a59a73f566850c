"""Numerical maximisation of Eve's pass probability over Bloch-vector parameters.

Each Bloch vector is written with two angles, ``(sin t cos p, sin t sin p, cos t)``.
The search evaluates a uniform angular grid (a random subset of it when the
full grid exceeds the budget), then runs derivative-free local refinement from
the best grid points.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..qcore import BlochVector

DEFAULT_GRID = 20
DEFAULT_ROUNDS = 3
DEFAULT_BUDGET = 200_000
BOUND_TOL = 1e-6


def _vecs(angles: np.ndarray) -> np.ndarray:
    """(..., 2k) angles -> (..., k, 3) unit vectors."""
    a = np.asarray(angles, dtype=float)
    t, p = a[..., 0::2], a[..., 1::2]
    return np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)


def _dh(v: np.ndarray):
    """Pair-kernel entries (d, h) from (..., 4, 3) vectors X1..X4."""
    x1, x2, x3, x4 = (v[..., i, :] for i in range(4))
    g = (x1[..., 0] * x3[..., 0] + x1[..., 2] * x3[..., 2]) * (x2[..., 0] * x4[..., 0] + x2[..., 2] * x4[..., 2])
    h = -x1[..., 1] * x2[..., 1] * (x3[..., 2] - x3[..., 0]) * (x4[..., 2] - x4[..., 0]) / 8
    return 0.5 + g / 8, h


def _single_side(a):
    v = _vecs(a)
    return (2 + v[..., 0, 0] * v[..., 1, 0] + v[..., 0, 2] * v[..., 1, 2]) / 4


def _pair(a):
    # best payload for fixed vectors: 2 Re(alpha beta*) = sign(h)
    d, h = _dh(_vecs(a))
    return d + np.abs(h)


def _entangled_pair(a):
    # largest eigenvalue of K (x) K' over all two-qubit payloads
    a = np.asarray(a)
    d1, h1 = _dh(_vecs(a[..., :8]))
    d2, h2 = _dh(_vecs(a[..., 8:]))
    return (d1 + np.abs(h1)) * (d2 + np.abs(h2))


def _entangled_bell(a):
    # Bell payload: Tr(rho K (x) K') = d d' + h h'
    a = np.asarray(a)
    d1, h1 = _dh(_vecs(a[..., :8]))
    d2, h2 = _dh(_vecs(a[..., 8:]))
    return d1 * d2 + h1 * h2


def _f(a):
    v = _vecs(a)
    x1, x2, x3, x4 = (v[..., i, :] for i in range(4))
    return (x1[..., 0] * x3[..., 0] + x1[..., 2] * x3[..., 2]) * (x2[..., 0] * x4[..., 0] + x2[..., 2] * x4[..., 2]) + (
        x1[..., 1] * x2[..., 1] * (x3[..., 0] + x3[..., 2]) * (x4[..., 0] + x4[..., 2])
    )


@dataclass(frozen=True)
class Objective:
    name: str
    func: object
    n_vectors: int
    claimed_bound: float
    nonnegative: bool = False  # restrict every vector to the non-negative octant


OBJECTIVES = {
    "single_side": Objective("single_side", _single_side, 2, 0.75),
    "pair": Objective("pair", _pair, 4, 0.75),
    "entangled_pair": Objective("entangled_pair", _entangled_pair, 8, 0.5625),
    "entangled_bell": Objective("entangled_bell", _entangled_bell, 8, 0.5625),
    "f": Objective("f", _f, 4, 2.0, nonnegative=True),
}


@dataclass
class BoundSearchResult:
    objective: str
    max_found: float
    argmax: tuple[BlochVector, ...]
    claimed_bound: float
    method: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.max_found <= self.claimed_bound + BOUND_TOL

    def check(self) -> "BoundSearchResult":
        if not self.holds:
            raise AssertionError(
                f"{self.objective}: found {self.max_found!r} above claimed bound {self.claimed_bound!r}"
            )
        return self

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "max_found": self.max_found,
            "claimed_bound": self.claimed_bound,
            "holds": self.holds,
            "argmax": [[v.x, v.y, v.z] for v in self.argmax],
            "method": self.method,
        }


def _grid_points(obj: Objective, grid: int, budget: int, rng: np.random.Generator) -> np.ndarray:
    if obj.nonnegative:
        t_axis = np.linspace(0, np.pi / 2, grid)
        p_axis = np.linspace(0, np.pi / 2, grid)
    else:
        t_axis = np.linspace(0, np.pi, grid)
        p_axis = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    n_params = 2 * obj.n_vectors
    total = float(grid) ** n_params
    axes = [t_axis, p_axis] * obj.n_vectors
    if total <= budget:
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)
    idx = rng.integers(0, grid, size=(budget, n_params))
    return np.stack([axes[j][idx[:, j]] for j in range(n_params)], axis=-1)


def maximize_pb(
    objective: str,
    grid: int = DEFAULT_GRID,
    rounds: int = DEFAULT_ROUNDS,
    budget: int = DEFAULT_BUDGET,
    starts: int = 8,
    seed: int = 0,
) -> BoundSearchResult:
    """Grid search followed by ``rounds`` of Powell / Nelder-Mead refinement.

    Objectives: ``single_side``, ``pair`` (payload chosen optimally),
    ``entangled_pair`` (both pairs attacked, payload chosen optimally),
    ``entangled_bell`` (Bell payload) and ``f``.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; choose from {sorted(OBJECTIVES)}")
    if grid < 2:
        raise ValueError("grid needs at least 2 points per angle")
    obj = OBJECTIVES[objective]
    rng = np.random.default_rng(seed)
    pts = _grid_points(obj, grid, budget, rng)
    vals = np.concatenate([obj.func(chunk) for chunk in np.array_split(pts, max(1, len(pts) // 50_000))])
    order = np.argsort(vals)[::-1][:starts]
    grid_best = float(vals[order[0]])

    n_params = 2 * obj.n_vectors
    bounds = [(0, np.pi / 2)] * n_params if obj.nonnegative else None

    def neg(a):
        return -float(obj.func(np.asarray(a)[None, :])[0])

    best_x, best_v = pts[order[0]], grid_best
    candidates = [pts[i] for i in order]
    for r in range(max(rounds, 0)):
        method = "Powell" if r % 2 == 0 else "Nelder-Mead"
        tol = 10.0 ** (-6 - 3 * r)
        nxt = []
        for x0 in candidates:
            if method == "Nelder-Mead" and bounds is not None:
                res = minimize(neg, x0, method="Powell", bounds=bounds, options={"xtol": tol, "ftol": tol * 1e-3})
            elif method == "Nelder-Mead":
                res = minimize(neg, x0, method=method, options={"xatol": tol, "fatol": tol * 1e-3, "maxiter": 20_000})
            else:
                res = minimize(neg, x0, method="Powell", bounds=bounds, options={"xtol": tol, "ftol": tol * 1e-3})
            nxt.append((-res.fun, res.x))
            if -res.fun > best_v:
                best_v, best_x = -res.fun, res.x
        nxt.sort(key=lambda t: -t[0])
        candidates = [x for _, x in nxt[: max(1, len(nxt) // 2)]]

    vecs = _vecs(best_x).reshape(obj.n_vectors, 3)
    if obj.nonnegative:
        vecs = np.clip(vecs, 0.0, None)
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return BoundSearchResult(
        objective=objective,
        max_found=float(best_v),
        argmax=tuple(BlochVector(*v) for v in vecs),
        claimed_bound=obj.claimed_bound,
        method={
            "grid_points_per_angle": grid,
            "grid_evaluations": int(len(pts)),
            "grid_best": grid_best,
            "refinement_rounds": rounds,
            "starts": starts,
            "seed": seed,
        },
    )
