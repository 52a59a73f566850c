import numpy as np
import pytest
from scipy import stats

from qencipher.cipher import (
    MASK_MATRICES,
    BasisMask,
    Ciphertext,
    PauliKey,
    Signature,
    all_pair_masks,
    apply_pauli_mask,
    average_over_masks,
    check_pass_probability,
    decrypt_final,
    decrypt_unmask,
    encrypt,
    masked_check_projector,
    pair_check_projector,
    roundtrip,
    sample_basis_mask,
    sample_pauli_key,
    sample_signature,
    verify_signature,
)
from qencipher.qcore import (
    CNOT,
    H,
    I2,
    X,
    Y,
    Z,
    QuantumError,
    QuantumState,
    apply_channel,
    apply_gate,
    bell_state,
    fidelity,
    kron,
    random_density,
    random_state,
)


def test_key_sampling_support_and_serialisation(rng):
    seen = {sample_pauli_key(1, rng).symbols[0] for _ in range(200)}
    assert seen == {"0", "x", "y", "z"}
    k = sample_pauli_key(3, rng)
    assert len(k) == 3 and len(k.to_bits()) == 6
    assert PauliKey.from_bits(k.to_bits()) == k
    assert PauliKey.from_hex(k.to_hex(), 3) == k


def test_key_uniformity_chi_square(rng):
    draws = [sample_pauli_key(1, rng).symbols[0] for _ in range(100_000)]
    counts = [draws.count(s) for s in "0xyz"]
    assert stats.chisquare(counts).pvalue > 0.001


def test_password_bit_layout():
    assert PauliKey(("0", "x", "y", "z")).to_bits() == "00011011"
    assert BasisMask(("I", "H", "X", "HX")).to_bits() == "00011011"
    assert BasisMask(("I", "H", "X", "HX")).to_hex() == "1b"
    assert BasisMask.from_hex("1b", 2) == BasisMask(("I", "H", "X", "HX"))
    assert np.allclose(MASK_MATRICES["HX"], H @ X)
    with pytest.raises(ValueError):
        PauliKey.from_hex("1ff", 2)
    with pytest.raises(ValueError):
        PauliKey(("q",))
    with pytest.raises(ValueError):
        Signature((2,))


def test_mask_and_signature_sampling(rng):
    m = sample_basis_mask(2, rng)
    assert len(m) == 4 and m.n_pairs == 2 and BasisMask.from_bits(m.to_bits()) == m
    assert len(sample_signature(5, rng)) == 5
    assert len(all_pair_masks()) == 16


def test_pauli_mask_examples(rng):
    psi = random_state(2, rng)
    assert np.allclose(apply_pauli_mask(psi, PauliKey.identity(2)).data, psi.data)
    assert np.allclose(apply_pauli_mask(QuantumState.basis("0"), PauliKey(("x",))).data, [0, 1])
    psi3 = random_state(3, rng)
    key = sample_pauli_key(3, rng)
    back = apply_pauli_mask(apply_pauli_mask(psi3, key), key, inverse=True)
    assert fidelity(psi3, back) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(QuantumError):
        apply_pauli_mask(psi3, PauliKey(("x",)))


def test_average_over_masks(rng):
    assert np.abs(average_over_masks(QuantumState.basis("0")).data - I2 / 2).max() <= 1e-12
    assert np.abs(average_over_masks(QuantumState.maximally_mixed(1)).data - I2 / 2).max() <= 1e-12
    assert np.abs(average_over_masks(random_state(2, rng)).data - np.eye(4) / 4).max() <= 1e-12
    assert np.abs(average_over_masks(random_density(3, rng)).data - np.eye(8) / 8).max() <= 1e-12


def test_encrypt_examples():
    ident = (PauliKey.identity(1), Signature((0,)), BasisMask.identity(1))
    assert np.allclose(encrypt(QuantumState.basis("0"), *ident).state.data, QuantumState.basis("00").data)
    assert np.allclose(encrypt(QuantumState.basis("1"), *ident).state.data, QuantumState.basis("11").data)
    plus = QuantumState(np.array([1, 1]) / np.sqrt(2))
    c = encrypt(plus, *ident)
    assert np.allclose(c.state.data, bell_state().data)
    un = decrypt_unmask(c, ident[2])
    assert np.allclose(un.data, np.kron(plus.data, [1, 0]))


def test_encrypt_matches_direct_operator(rng):
    psi = random_state(2, rng)
    key, sig, mask = sample_pauli_key(2, rng), Signature((1, 0)), sample_basis_mask(2, rng)
    # oracle: kron of masks . CNOT on each pair . (U psi interleaved with |a>)
    u = key.unitary() @ psi.data
    joint = np.zeros(16, dtype=complex)
    for q1 in range(2):
        for q2 in range(2):
            joint[(q1 << 3) | (sig.bits[0] << 2) | (q2 << 1) | sig.bits[1]] = u[2 * q1 + q2]
    joint = kron(CNOT, CNOT) @ joint
    joint = kron(*mask.matrices()) @ joint
    assert np.abs(encrypt(psi, key, sig, mask).state.data - joint).max() <= 1e-12


def test_password_length_checks(rng):
    psi = random_state(2, rng)
    with pytest.raises(QuantumError):
        encrypt(psi, PauliKey.identity(1), Signature((0, 0)), BasisMask.identity(2))
    with pytest.raises(QuantumError):
        Ciphertext(random_state(3, rng))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_honest_roundtrip(rng, n):
    for _ in range(5):
        psi = random_state(n, rng)
        key, sig, mask = sample_pauli_key(n, rng), sample_signature(n, rng), sample_basis_mask(n, rng)
        check, out = roundtrip(psi, key, sig, mask, rng)
        assert check.passed and check.pass_probability == pytest.approx(1.0, abs=1e-12)
        assert fidelity(psi, out) >= 1 - 1e-10
        # Q marginal before the last step is U_i |psi>
        assert fidelity(apply_pauli_mask(psi, key), check.q_state) >= 1 - 1e-10


def test_bell_roundtrip_ten_draws(rng):
    for _ in range(10):
        key, sig, mask = sample_pauli_key(2, rng), sample_signature(2, rng), sample_basis_mask(2, rng)
        _, out = roundtrip(bell_state(), key, sig, mask, rng)
        assert fidelity(bell_state(), out) >= 1 - 1e-10


def test_key_all_zero_is_identity(rng):
    psi = random_state(2, rng)
    assert np.allclose(decrypt_final(psi, PauliKey.identity(2)).data, psi.data)


def test_wrong_mask_breaks_signature(rng):
    psi = random_state(1, rng)
    key, sig = PauliKey.identity(1), Signature((0,))
    worse = []
    for l1, l2 in all_pair_masks():
        right = BasisMask((l1, l2))
        c = encrypt(psi, key, sig, right)
        for wrong_op in ("I", "H", "X", "HX"):
            if wrong_op == l2:
                continue
            p = check_pass_probability(decrypt_unmask(c, BasisMask((l1, wrong_op))), sig)
            worse.append(p)
    assert max(worse) < 1 - 1e-6


def test_signature_flip_and_depolarise(rng):
    psi = random_state(1, rng)
    key, sig, mask = sample_pauli_key(1, rng), Signature((1,)), sample_basis_mask(1, rng)
    un = decrypt_unmask(encrypt(psi, key, sig, mask), mask)
    flipped = apply_gate(un, X, [1])
    assert check_pass_probability(flipped, sig) == pytest.approx(0.0, abs=1e-12)
    assert not verify_signature(flipped, sig, rng).passed
    dep = apply_channel(un, [P / 2 for P in (I2, X, Y, Z)], [1])
    assert check_pass_probability(dep, sig) == pytest.approx(0.5, abs=1e-12)
    hits = [verify_signature(dep, sig, rng).passed for _ in range(4000)]
    assert abs(np.mean(hits) - 0.5) <= 3 * np.sqrt(0.25 / 4000)


def test_masked_projector_frames():
    for l1, l2 in all_pair_masks():
        for a in (0, 1):
            p = masked_check_projector(l1, l2, a)
            assert np.allclose(p @ p, p) and np.trace(p).real == pytest.approx(2)
    # the pre-CNOT projector becomes |y, a> on S after the CNOT is undone
    for a in (0, 1):
        after = CNOT @ pair_check_projector(a) @ CNOT
        assert np.allclose(after, np.kron(I2, np.diag([1 - a, a])))
