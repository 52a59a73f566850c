import numpy as np
import pytest

from qencipher.attacks import (
    BREIDBART_U,
    AttackSpec,
    InterceptResendMap,
    ProbeGate,
    apply_attack,
    breidbart_spec,
    ir_pair_probe_gates,
    pair_kraus,
    probe_gate_cnot,
    probe_gate_u,
)
from qencipher.analysis import pb_exact
from qencipher.cipher import (
    PauliKey,
    Signature,
    check_pass_probability,
    decrypt_unmask,
    encrypt,
    sample_basis_mask,
    sample_pauli_key,
)
from qencipher.qcore import (
    BREIDBART,
    I2,
    ZAXIS,
    BlochVector,
    QuantumError,
    QuantumState,
    fidelity,
    partial_trace,
    random_density,
    random_state,
)


def unit(rng):
    v = rng.normal(size=3)
    return BlochVector(*(v / np.linalg.norm(v)))


def test_ir_map_examples():
    m = InterceptResendMap(ZAXIS, ZAXIS)
    assert np.allclose(m.apply_exact(QuantumState.basis("0")).data, np.diag([1, 0]))
    plus = QuantumState(np.array([1, 1]) / np.sqrt(2))
    assert np.allclose(m.apply_exact(plus).data, I2 / 2)


def test_ir_map_dilation_and_kraus_agree(rng):
    for _ in range(20):
        m = InterceptResendMap(unit(rng), unit(rng))
        rho = random_density(1, rng)
        exact = m.apply_exact(rho).data
        assert np.abs(m.apply_dilated(rho).data - exact).max() <= 1e-12
        kr = sum(k @ rho.data @ k.conj().T for k in m.kraus())
        assert np.abs(kr - exact).max() <= 1e-12
        assert np.trace(exact).real == pytest.approx(1.0, abs=1e-12)


def test_ir_map_idempotent_same_basis(rng):
    for _ in range(10):
        v = unit(rng)
        m = InterceptResendMap(v, v)
        once = m.apply_exact(random_density(1, rng))
        assert np.abs(m.apply_exact(once).data - once.data).max() <= 1e-12


def test_ir_map_sampled_mean(rng):
    m = InterceptResendMap(unit(rng), unit(rng))
    rho = random_state(1, rng)
    acc = np.zeros((2, 2), dtype=complex)
    trials = 20_000
    for _ in range(trials):
        acc += m.apply_sampled(rho, rng)[1].data
    assert np.abs(acc / trials - m.apply_exact(rho).data).max() < 0.02


def test_breidbart():
    assert BREIDBART.norm == pytest.approx(1.0)
    assert np.allclose(BREIDBART_U[:, 0], [np.cos(np.pi / 8), np.sin(np.pi / 8)])
    spec = breidbart_spec("S")
    assert spec.variant == "ir_single" and spec.vectors == (BREIDBART, BREIDBART)
    assert pb_exact(QuantumState.basis("0"), None, spec).exact == pytest.approx(0.75, abs=1e-12)


def test_spec_validation_and_json():
    with pytest.raises(ValueError):
        AttackSpec("teleport")
    with pytest.raises(QuantumError):
        AttackSpec.ir_single("S", BlochVector(1, 1, 0), ZAXIS)
    with pytest.raises(ValueError):
        AttackSpec.ir_single("Q", pairs=[2]).targets(2)
    with pytest.raises(QuantumError):
        ProbeGate(np.array([[1, 1], [0, 1]]), (0,))
    gates, n_anc = ir_pair_probe_gates()
    for spec in (
        AttackSpec.none(),
        breidbart_spec("pair", pairs=[1]),
        AttackSpec.ir_single("Q", ZAXIS, BREIDBART),
        AttackSpec.replace_random([0]),
        AttackSpec.probe(gates, n_anc),
    ):
        back = AttackSpec.from_json(spec.to_json())
        assert back.to_json() == spec.to_json()


def test_none_leaves_ciphertext(rng):
    c = encrypt(random_state(1, rng), sample_pauli_key(1, rng), Signature((0,)), sample_basis_mask(1, rng))
    out, mem = apply_attack(c, AttackSpec.none(), rng)
    assert np.array_equal(out.state.data, c.state.data) and mem.outcomes == []


@pytest.mark.parametrize("mode", ["channel", "trajectory"])
def test_every_variant_preserves_trace(rng, mode):
    gates, n_anc = ir_pair_probe_gates()
    c = encrypt(random_state(2, rng), sample_pauli_key(2, rng), Signature((1, 0)), sample_basis_mask(2, rng))
    for spec in (
        AttackSpec.none(),
        breidbart_spec("S"),
        AttackSpec.ir_pair(unit(rng), unit(rng), unit(rng), unit(rng), pairs=[1]),
        AttackSpec.replace_random([0]),
        AttackSpec.probe(gates, n_anc, pairs=[0]),
    ):
        out, _ = apply_attack(c, spec, rng, mode=mode)
        assert out.state.n_qubits == 4
        assert out.state.trace() == pytest.approx(1.0, abs=1e-10)


def test_replace_random_pass_half(rng):
    psi = random_state(1, rng)
    for sig in (Signature((0,)), Signature((1,))):
        total = 0.0
        for _ in range(8):
            mask = sample_basis_mask(1, rng)
            c = encrypt(psi, sample_pauli_key(1, rng), sig, mask)
            out, mem = apply_attack(c, AttackSpec.replace_random(), rng, mode="channel")
            total += check_pass_probability(decrypt_unmask(out, mask), sig)
            # Eve keeps the genuine qubits
            assert fidelity(QuantumState(c.state.data), mem.held) == pytest.approx(1.0, abs=1e-12)
        assert total / 8 == pytest.approx(0.5, abs=1e-12)


def test_ir_pair_computational_five_eighths():
    psi = QuantumState(np.array([1, 1]) / np.sqrt(2))
    spec = AttackSpec.ir_pair(ZAXIS, ZAXIS, ZAXIS, ZAXIS)
    rep = pb_exact(psi, None, spec, method="enumerate")
    assert rep.exact == pytest.approx(0.625, abs=1e-12)


def test_pair_kraus_complete(rng):
    gates, n_anc = ir_pair_probe_gates()
    for spec in (
        AttackSpec.none(),
        breidbart_spec("Q"),
        AttackSpec.ir_pair(unit(rng), unit(rng), unit(rng), unit(rng)),
        AttackSpec.replace_random(),
        AttackSpec.probe(gates, n_anc),
    ):
        ks = pair_kraus(spec)
        assert np.abs(sum(k.conj().T @ k for k in ks) - np.eye(4)).max() <= 1e-12


def test_probe_equivalent_to_breidbart_pair(rng):
    gates, n_anc = ir_pair_probe_gates()
    psi = random_state(1, rng)
    a = pb_exact(psi, None, AttackSpec.probe(gates, n_anc)).exact
    b = pb_exact(psi, None, breidbart_spec("pair")).exact
    assert a == pytest.approx(b, abs=1e-12)


def test_trajectory_ir_records_outcomes(rng):
    c = encrypt(QuantumState.basis("0"), PauliKey.identity(1), Signature((0,)), sample_basis_mask(1, rng))
    _, mem = apply_attack(c, breidbart_spec("pair"), rng, mode="trajectory")
    assert [(k, side) for k, side, _ in mem.outcomes] == [(0, "Q"), (0, "S")]


def test_probe_gates_helpers():
    assert probe_gate_u(2).wires == (2,)
    assert probe_gate_cnot(0, 3).wires == (0, 3)
    d = probe_gate_cnot(1, 2).to_dict()
    assert np.allclose(ProbeGate.from_dict(d).matrix, probe_gate_cnot(1, 2).matrix)
    assert partial_trace(QuantumState.basis("01"), [1]).data[1, 1] == 1
