import numpy as np
import pytest

from qencipher.attacks import AttackSpec, breidbart_spec, ir_pair_probe_gates, probe_gate_cnot, probe_gate_u
from qencipher.analysis import pb_exact
from qencipher.probe import (
    ProbeFamily,
    describe,
    documented_family,
    evaluate_probe,
    probe_attack_search,
)
from qencipher.qcore import QuantumState


def test_documented_family_values():
    table = probe_attack_search(documented_family())
    by_name = {r.topology.split(":")[0]: r.pass_probability for r in table}
    assert by_name["ir-both-sides"] == pytest.approx(5 / 8, abs=1e-12)
    assert by_name["ir-signature-side"] == pytest.approx(3 / 4, abs=1e-12)
    assert len(table.find(13 / 16)) == 2
    assert len(table.find(11 / 16)) == 2


def test_probe_matches_channel_average():
    # classical payload |x>, averaged over x and the signature: same as pb_exact on I/2
    gates, n_anc = ir_pair_probe_gates()
    mixed = QuantumState.maximally_mixed(1)
    for gs, na in ((gates, n_anc), (documented_family().explicit[4][1], 2)):
        assert evaluate_probe(gs, na) == pytest.approx(pb_exact(mixed, None, AttackSpec.probe(gs, na)).exact, abs=1e-12)
    assert evaluate_probe(gates, n_anc) == pytest.approx(pb_exact(mixed, None, breidbart_spec("pair")).exact)


def test_exhaustive_search_hits_targets():
    fam = ProbeFamily.exhaustive(n_ancillas=1, max_len=6)
    table = probe_attack_search(fam)
    assert len(table) == fam.size() == 337_041
    hits13 = table.find(13 / 16)
    hits11 = table.find(11 / 16)
    assert hits13 and hits11
    # a word that never touches the data wires is undetectable
    assert table.best().pass_probability == pytest.approx(1.0, abs=1e-12)
    # every reported word re-evaluates to its value by dense simulation
    for r in hits13[:3] + hits11[:3]:
        assert evaluate_probe(r.gates, 1) == pytest.approx(r.pass_probability, abs=1e-12)


def test_search_agrees_with_dense_on_sample():
    fam = ProbeFamily.exhaustive(n_ancillas=1, max_len=3)
    table = probe_attack_search(fam)
    rng = np.random.default_rng(3)
    for i in rng.integers(0, len(table), size=25):
        r = table[int(i)]
        assert evaluate_probe(r.gates, 1) == pytest.approx(r.pass_probability, abs=1e-12)


def test_empty_family_and_cap():
    assert len(probe_attack_search(ProbeFamily.empty())) == 0
    assert probe_attack_search(ProbeFamily.empty()).best() is None
    with pytest.raises(ValueError):
        probe_attack_search(ProbeFamily.exhaustive(1, 6), cap=1000)
    with pytest.raises(ValueError):
        ProbeFamily.exhaustive(n_ancillas=3)


def test_describe():
    s = describe([probe_gate_u(2), probe_gate_cnot(0, 2), probe_gate_cnot(2, 1)])
    assert s == "U(E1) C(Q>E1) C(E1>S)"
