"""Dense state-vector / density-matrix primitives for small qubit registers.

Qubit 0 is the leftmost tensor factor, so the basis index of ``|q0 q1 ... q_{n-1}>``
is ``q0 * 2**(n-1) + ... + q_{n-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12
STATE_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
PAULIS = {"0": I2, "x": X, "y": Y, "z": Z}

for _m in (I2, X, Y, Z, H, CNOT):
    _m.flags.writeable = False


class QuantumError(ValueError):
    """Invalid quantum object or incompatible operands."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def _n_from_dim(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise QuantumError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise QuantumError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
    return n


@dataclass(frozen=True, eq=False)
class QuantumState:
    """An n-qubit state held either as an amplitude vector or a density matrix.

    The array is copied and made read-only on construction. Use
    :meth:`from_vector` / :meth:`from_density` for validated construction.
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data))
        if self.data.ndim == 1:
            _n_from_dim(self.data.shape[0])
        elif self.data.ndim == 2 and self.data.shape[0] == self.data.shape[1]:
            _n_from_dim(self.data.shape[0])
        else:
            raise QuantumError(f"bad state shape {self.data.shape}")

    @classmethod
    def from_vector(cls, amplitudes, tol: float = STATE_TOL) -> "QuantumState":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.vdot(v, v).real
        if abs(norm - 1) > tol:
            raise QuantumError(f"vector norm^2 {norm} != 1")
        return cls(v)

    @classmethod
    def from_density(cls, rho, tol: float = STATE_TOL) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise QuantumError("density matrix must be square")
        if np.abs(rho - rho.conj().T).max() > tol:
            raise QuantumError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > tol:
            raise QuantumError("density matrix trace != 1")
        if np.linalg.eigvalsh(rho).min() < -tol:
            raise QuantumError("density matrix has a negative eigenvalue")
        return cls(rho)

    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> "QuantumState":
        """Computational basis ket, e.g. ``QuantumState.basis("010")``."""
        bits = [int(b) for b in bits]
        v = np.zeros(1 << len(bits), dtype=complex)
        v[int("".join(map(str, bits)) or "0", 2)] = 1
        return cls(v)

    @classmethod
    def maximally_mixed(cls, n: int) -> "QuantumState":
        return cls(np.eye(1 << n, dtype=complex) / (1 << n))

    @property
    def n_qubits(self) -> int:
        return self.data.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_vector:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def to_density(self) -> "QuantumState":
        return self if not self.is_vector else QuantumState(self.density())

    def is_pure(self, tol: float = STATE_TOL) -> bool:
        if self.is_vector:
            return True
        rho = self.data
        return abs(np.trace(rho @ rho).real - 1) <= tol

    def pure_vector(self, tol: float = 1e-8) -> np.ndarray:
        """Amplitude vector of a pure state (dominant eigenvector for matrices)."""
        if self.is_vector:
            return np.array(self.data)
        w, v = np.linalg.eigh(self.data)
        if abs(w[-1] - 1) > tol:
            raise QuantumError("state is not pure")
        return v[:, -1]

    def trace(self) -> float:
        if self.is_vector:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def check(self, tol: float = STATE_TOL) -> None:
        """Raise if the state invariants are violated."""
        if self.is_vector:
            QuantumState.from_vector(self.data, tol)
        else:
            QuantumState.from_density(self.data, tol)

    def __repr__(self):
        kind = "vector" if self.is_vector else "density"
        return f"QuantumState(n_qubits={self.n_qubits}, {kind})"


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "BlochVector":
        st = np.sin(theta)
        return cls(st * np.cos(phi), st * np.sin(phi), np.cos(theta))

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: "BlochVector") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def operator(self) -> np.ndarray:
        """v . sigma"""
        return self.x * X + self.y * Y + self.z * Z

    def __neg__(self):
        return BlochVector(-self.x, -self.y, -self.z)

    def __iter__(self):
        return iter((self.x, self.y, self.z))


ZAXIS = BlochVector(0, 0, 1)
XAXIS = BlochVector(1, 0, 0)
YAXIS = BlochVector(0, 1, 0)
BREIDBART = BlochVector(1 / np.sqrt(2), 0, 1 / np.sqrt(2))


def kron(*mats) -> np.ndarray:
    """Kronecker product of any number of matrices or vectors; ``kron()`` is the scalar 1."""
    out = np.ones((1, 1), dtype=complex) if not mats or np.ndim(mats[0]) == 2 else np.ones(1, dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def is_unitary(m: np.ndarray, tol: float = STATE_TOL) -> bool:
    m = np.asarray(m)
    return (
        m.ndim == 2
        and m.shape[0] == m.shape[1]
        and np.abs(m.conj().T @ m - np.eye(m.shape[0])).max() <= tol
    )


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise QuantumError(f"duplicate target in {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise QuantumError(f"target {t} out of range for {n} qubits")
    return targets


def _apply_left(tensor: np.ndarray, op: np.ndarray, targets: list[int], n: int, offset: int = 0):
    """Contract ``op`` into axes ``offset + targets`` of a rank-(>=n) tensor."""
    k = len(targets)
    op_t = op.reshape([2] * (2 * k))
    axes = [offset + t for t in targets]
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_matrix(state: QuantumState, op: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Raw ``op`` on ``targets``: returns ``op psi`` or ``op rho op^dagger`` as an array."""
    n = state.n_qubits
    targets = _check_targets(targets, n)
    op = np.asarray(op, dtype=complex)
    if op.shape != (1 << len(targets),) * 2:
        raise QuantumError(f"operator shape {op.shape} does not match {len(targets)} targets")
    if not targets:
        return op[0, 0] * state.data if state.is_vector else abs(op[0, 0]) ** 2 * state.data
    if state.is_vector:
        t = state.data.reshape([2] * n)
        return _apply_left(t, op, targets, n).reshape(-1)
    t = state.data.reshape([2] * (2 * n))
    t = _apply_left(t, op, targets, n)
    t = _apply_left(t, op.conj(), targets, n, offset=n)
    return t.reshape(1 << n, 1 << n)


def apply_gate(state: QuantumState, gate: np.ndarray, targets: Sequence[int]) -> QuantumState:
    """Apply a unitary ``gate`` to the ordered ``targets``; identity elsewhere."""
    gate = np.asarray(gate, dtype=complex)
    if not is_unitary(gate):
        raise QuantumError("gate is not unitary")
    return QuantumState(apply_matrix(state, gate, targets))


def apply_channel(state: QuantumState, kraus: Iterable[np.ndarray], targets: Sequence[int]) -> QuantumState:
    """Apply a channel given by Kraus operators on ``targets``; returns a density matrix."""
    rho = state.to_density()
    out = sum(apply_matrix(rho, k, targets) for k in kraus)
    return QuantumState(out)


def partial_trace(state: QuantumState, keep: Iterable[int]) -> QuantumState:
    """Reduced density matrix over the qubits in ``keep`` (kept in ascending order)."""
    n = state.n_qubits
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        if not 0 <= k < n:
            raise QuantumError(f"qubit {k} out of range for {n} qubits")
    drop = [q for q in range(n) if q not in keep]
    dk = 1 << len(keep)
    if state.is_vector:
        t = state.data.reshape([2] * n).transpose(keep + drop).reshape(dk, -1)
        return QuantumState(t @ t.conj().T)
    t = state.data.reshape([2] * (2 * n))
    t = t.transpose(keep + drop + [n + q for q in keep] + [n + q for q in drop])
    t = t.reshape(dk, 1 << len(drop), dk, 1 << len(drop))
    return QuantumState(np.einsum("ajbj->ab", t))


def permute_qubits(state: QuantumState, order: Sequence[int]) -> QuantumState:
    """New state whose qubit ``k`` is the old qubit ``order[k]``."""
    n = state.n_qubits
    order = list(order)
    if sorted(order) != list(range(n)):
        raise QuantumError(f"{order} is not a permutation of range({n})")
    if state.is_vector:
        return QuantumState(state.data.reshape([2] * n).transpose(order).reshape(-1))
    t = state.data.reshape([2] * (2 * n)).transpose(order + [n + q for q in order])
    return QuantumState(t.reshape(1 << n, 1 << n))


def tensor(*states: QuantumState) -> QuantumState:
    """Tensor product; stays a vector only when every factor is a vector."""
    if all(s.is_vector for s in states):
        return QuantumState(kron(*[s.data for s in states]) if states else np.ones(1))
    return QuantumState(kron(*[s.density() for s in states]))


def _check_projectors(projectors: Sequence[np.ndarray], dim: int, tol: float = STATE_TOL) -> None:
    total = np.zeros((dim, dim), dtype=complex)
    for p in projectors:
        p = np.asarray(p, dtype=complex)
        if p.shape != (dim, dim):
            raise QuantumError(f"projector shape {p.shape} != {(dim, dim)}")
        if np.abs(p - p.conj().T).max() > tol or np.abs(p @ p - p).max() > tol:
            raise QuantumError("operator is not an orthogonal projector")
        total += p
    if np.abs(total - np.eye(dim)).max() > tol:
        raise QuantumError("projectors do not resolve the identity")


def born_probabilities(state: QuantumState, projectors: Sequence[np.ndarray], targets=None) -> np.ndarray:
    targets = list(range(state.n_qubits)) if targets is None else list(targets)
    probs = []
    for p in projectors:
        out = apply_matrix(state, p, targets)
        if state.is_vector:
            probs.append(np.vdot(out, out).real)
        else:
            probs.append(np.trace(out).real)
    return np.clip(np.array(probs), 0.0, 1.0)


def measure_projective(
    state: QuantumState,
    projectors: Sequence[np.ndarray],
    rng: np.random.Generator,
    targets: Sequence[int] | None = None,
    outcome: int | None = None,
):
    """Sample a projective measurement.

    Returns ``(index, post_state, probability)`` where ``probability`` is the exact
    Born probability of the returned outcome. ``targets`` restricts the projectors
    to a subset of qubits; ``outcome`` forces a postselected result.
    """
    targets = list(range(state.n_qubits)) if targets is None else _check_targets(targets, state.n_qubits)
    _check_projectors(projectors, 1 << len(targets))
    probs = born_probabilities(state, projectors, targets)
    if outcome is None:
        outcome = int(rng.choice(len(probs), p=probs / probs.sum()))
    p = float(probs[outcome])
    if p <= 0:
        raise QuantumError(f"outcome {outcome} has zero probability")
    post = apply_matrix(state, projectors[outcome], targets) / (np.sqrt(p) if state.is_vector else p)
    return outcome, QuantumState(post), p


def computational_projectors(k: int = 1) -> list[np.ndarray]:
    d = 1 << k
    out = []
    for i in range(d):
        p = np.zeros((d, d), dtype=complex)
        p[i, i] = 1
        out.append(p)
    return out


def bloch_projector(v: BlochVector, sign: int = 0) -> np.ndarray:
    """Rank-1 projector (I + (-1)^sign v.sigma) / 2 for a unit Bloch vector."""
    if abs(v.norm - 1) > STATE_TOL:
        raise QuantumError(f"Bloch vector norm {v.norm} != 1")
    return 0.5 * (I2 + (-1) ** int(sign) * v.operator())


def bloch_state(v: BlochVector) -> np.ndarray:
    """Ket whose projector is ``bloch_projector(v, 0)`` (global phase fixed by a real first entry)."""
    w, vecs = np.linalg.eigh(bloch_projector(v))
    k = vecs[:, -1]
    ph = k[0] / abs(k[0]) if abs(k[0]) > 1e-12 else k[1] / abs(k[1])
    return k / ph


def density_bloch(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    return np.array([np.trace(rho @ s).real for s in (X, Y, Z)])


def trace_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(a b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise QuantumError(f"incompatible shapes {a.shape}, {b.shape}")
    return complex(np.einsum("ij,ji->", a, b))


def fidelity(pure: QuantumState, candidate: QuantumState) -> float:
    """<psi| rho |psi> for a pure reference state."""
    if pure.dim != candidate.dim:
        raise QuantumError("dimension mismatch")
    psi = pure.pure_vector()
    if candidate.is_vector:
        f = abs(np.vdot(psi, candidate.data)) ** 2
    else:
        f = np.vdot(psi, candidate.data @ psi).real
    return float(min(max(f, 0.0), 1.0))


def haar_qubit(rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure qubit: polar angle with cos(theta) uniform, azimuth and global phase uniform."""
    cos_t = rng.uniform(-1.0, 1.0)
    phi, gamma = rng.uniform(0.0, 2 * np.pi, size=2)
    c = np.sqrt((1 + cos_t) / 2)
    s = np.sqrt((1 - cos_t) / 2)
    return np.exp(1j * gamma) * np.array([c, np.exp(1j * phi) * s])


def haar_unitary_from_ket(ket: np.ndarray) -> np.ndarray:
    """2x2 unitary whose first column is ``ket``."""
    a, b = ket
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]], dtype=complex)


def random_state(n: int, rng: np.random.Generator) -> QuantumState:
    """Haar-random pure n-qubit state."""
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return QuantumState(v / np.linalg.norm(v))


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> QuantumState:
    d = 1 << n
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return QuantumState(rho / np.trace(rho).real)


def bell_state() -> QuantumState:
    return QuantumState(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))
