import itertools

import numpy as np
import pytest

from qencipher.qcore import (
    BREIDBART,
    CNOT,
    H,
    I2,
    X,
    XAXIS,
    Y,
    Z,
    ZAXIS,
    BlochVector,
    QuantumError,
    QuantumState,
    apply_channel,
    apply_gate,
    bell_state,
    bloch_projector,
    bloch_state,
    born_probabilities,
    computational_projectors,
    fidelity,
    haar_qubit,
    kron,
    measure_projective,
    partial_trace,
    permute_qubits,
    random_density,
    random_state,
    tensor,
    trace_inner,
)


def kron_oracle(a, b):
    p, q = b.shape
    out = np.zeros((a.shape[0] * p, a.shape[1] * q), dtype=complex)
    for i, j, k, l in itertools.product(range(a.shape[0]), range(a.shape[1]), range(p), range(q)):
        out[i * p + k, j * q + l] = a[i, j] * b[k, l]
    return out


def full_operator(gate, targets, n):
    """Dense 2^n operator by summing over the target-subspace matrix elements."""
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    k = len(targets)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = int("".join(str(bits[t]) for t in targets), 2)
        for sub_out in range(1 << k):
            new = list(bits)
            for j, t in enumerate(targets):
                new[t] = (sub_out >> (k - 1 - j)) & 1
            row = int("".join(map(str, new)), 2)
            out[row, col] += gate[sub_out, sub_in]
    return out


def test_kron_identity_and_signs():
    assert np.allclose(kron(I2, I2), np.eye(4))
    assert np.allclose(np.diag(kron(Z, Z)), [1, -1, -1, 1])


def test_kron_against_index_oracle():
    assert np.abs(kron(X, Y) - kron_oracle(X, Y)).max() == 0
    m = np.arange(6).reshape(2, 3) + 1j
    assert np.abs(kron(m, H) - kron_oracle(m, H)).max() < 1e-15


def test_cnot_truth_table():
    assert np.allclose(apply_gate(QuantumState.basis("00"), CNOT, [0, 1]).data, QuantumState.basis("00").data)
    assert np.allclose(apply_gate(QuantumState.basis("10"), CNOT, [0, 1]).data, QuantumState.basis("11").data)


@pytest.mark.parametrize("targets", [[0], [2], [0, 1], [2, 0], [1, 2]])
def test_apply_gate_matches_dense_oracle(rng, targets):
    psi = random_state(3, rng)
    k = len(targets)
    g = np.linalg.qr(rng.normal(size=(1 << k, 1 << k)) + 1j * rng.normal(size=(1 << k, 1 << k)))[0]
    out = apply_gate(psi, g, targets)
    assert np.abs(out.data - full_operator(g, targets, 3) @ psi.data).max() <= 1e-12
    rho = psi.to_density()
    out_rho = apply_gate(rho, g, targets)
    assert np.abs(out_rho.data - np.outer(out.data, out.data.conj())).max() <= 1e-12


def test_apply_gate_rejects_bad_input():
    psi = QuantumState.basis("00")
    with pytest.raises(QuantumError):
        apply_gate(psi, np.array([[1, 1], [0, 1]]), [0])
    with pytest.raises(QuantumError):
        apply_gate(psi, X, [2])
    with pytest.raises(QuantumError):
        apply_gate(psi, CNOT, [0, 0])


def test_partial_trace_examples():
    prod = tensor(QuantumState.basis("0"), QuantumState.basis("1"))
    assert np.allclose(partial_trace(prod, [0]).data, np.diag([1, 0]))
    for keep in ([0], [1]):
        assert np.allclose(partial_trace(bell_state(), keep).data, I2 / 2)


def test_partial_trace_matches_sum_oracle(rng):
    rho = random_density(3, rng).data
    t = rho.reshape([2] * 6)
    oracle = np.zeros((4, 4), dtype=complex)
    for a, b, c, d, j in itertools.product(range(2), repeat=5):
        # keep qubits 0 and 2, trace qubit 1
        oracle[2 * a + b, 2 * c + d] += t[a, j, b, c, j, d]
    got = partial_trace(QuantumState(rho), [0, 2]).data
    assert np.abs(got - oracle).max() <= 1e-12


def test_measurement_examples(rng):
    k, post, p = measure_projective(QuantumState.basis("0"), computational_projectors(), rng)
    assert (k, p) == (0, 1.0)
    plus = QuantumState(H @ np.array([1, 0], dtype=complex))
    assert np.allclose(born_probabilities(plus, computational_projectors()), [0.5, 0.5])


def test_born_probabilities_quadratic_form(rng):
    psi = random_state(2, rng)
    projs = [kron(bloch_projector(XAXIS, s), bloch_projector(ZAXIS, t)) for s in (0, 1) for t in (0, 1)]
    got = born_probabilities(psi, projs)
    oracle = [np.vdot(psi.data, p @ psi.data).real for p in projs]
    assert np.abs(got - oracle).max() <= 1e-12


def test_measure_partial_targets_postselect(rng):
    _, post, p = measure_projective(bell_state(), computational_projectors(), rng, targets=[1], outcome=1)
    assert p == pytest.approx(0.5)
    assert np.allclose(post.data, QuantumState.basis("11").data)


def test_bloch_projectors():
    assert np.allclose(bloch_projector(ZAXIS, 0), np.diag([1, 0]))
    assert np.allclose(bloch_projector(XAXIS, 0), H @ np.diag([1, 0]) @ H)
    b = bloch_projector(BREIDBART, 0)
    r = 1 / (2 * np.sqrt(2))
    assert np.allclose(np.diag(b).real, [0.5 + r, 0.5 - r])
    with pytest.raises(QuantumError):
        bloch_projector(BlochVector(1, 1, 0))


def test_bloch_state_is_eigenvector(rng):
    for _ in range(10):
        v = BlochVector(*(lambda a: a / np.linalg.norm(a))(rng.normal(size=3)))
        k = bloch_state(v)
        assert np.allclose(bloch_projector(v) @ k, k)


def test_trace_inner(rng):
    assert trace_inner(I2, I2) == 2
    assert trace_inner(X, Y) == 0
    for _ in range(20):
        a, b = (rng.normal(size=3) for _ in range(2))
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        ra, rb = bloch_projector(BlochVector(*a)), bloch_projector(BlochVector(*b))
        assert abs(trace_inner(ra, rb) - 0.5 * (1 + a @ b)) <= 1e-12


def test_fidelity_examples(rng):
    psi = random_state(1, rng)
    assert fidelity(psi, psi.to_density()) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(QuantumState.basis("0"), QuantumState.maximally_mixed(1)) == pytest.approx(0.5)


def test_haar_mean_fidelity(rng):
    f = np.array([abs(haar_qubit(rng)[0]) ** 2 for _ in range(100_000)])
    assert abs(f.mean() - 0.5) <= 3 * f.std(ddof=1) / np.sqrt(len(f))


def test_state_validation():
    with pytest.raises(QuantumError):
        QuantumState.from_vector([1, 1])
    with pytest.raises(QuantumError):
        QuantumState(np.ones(3))
    with pytest.raises(QuantumError):
        QuantumState.from_density(np.array([[1, 1], [0, 0]]))
    with pytest.raises(QuantumError):
        QuantumState.from_density(np.diag([1.5, -0.5]))
    s = QuantumState.basis("1")
    with pytest.raises(ValueError):
        s.data[0] = 1


def test_permute_and_channel(rng):
    psi = random_state(3, rng)
    back = permute_qubits(permute_qubits(psi, [2, 0, 1]), [1, 2, 0])
    assert np.allclose(back.data, psi.data)
    dep = apply_channel(psi, [P / 2 for P in (I2, X, Y, Z)], [1])
    assert np.allclose(partial_trace(dep, [1]).data, I2 / 2)
    assert dep.trace() == pytest.approx(1.0)
