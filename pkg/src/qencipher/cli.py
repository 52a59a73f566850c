"""Batch experiment runner.

    qencipher <subcommand> [--config PATH] [--seed N] [--out PATH]
                           [--format csv|json] [--trials N] [--grid N]

Exit codes: 0 success, 1 a checked bound or assertion failed, 2 usage or
configuration error. Output is deterministic for a given (config, seed).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources

import jsonschema
import numpy as np

from ._fmt import dumps, fmt
from .attacks import AttackSpec
from .cipher import Signature
from .qcore import BlochVector, QuantumState, bell_state, fidelity, random_state

COMMANDS = ("roundtrip", "attack-sweep", "bound-search", "privacy-amp", "scenario", "mc-estimate")
FIDELITY_TOL = 1e-10
BOUND_TOL = 1e-6
MC_SIGMA_LIMIT = 5.0
DEFAULT_MAX_POINTS = 100_000
SWEEP_COLUMNS = (
    "index", "family",
    "x1_x", "x1_y", "x1_z", "x2_x", "x2_y", "x2_z",
    "x3_x", "x3_y", "x3_z", "x4_x", "x4_y", "x4_z",
    "closed_form", "exact", "mc_mean", "mc_stderr", "mc_trials",
)


class ConfigError(Exception):
    """Invalid configuration or usage; maps to exit status 2."""


def load_schema() -> dict:
    text = resources.files("qencipher").joinpath("schemas/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_config(command: str, cfg: dict) -> dict:
    schema = dict(load_schema())
    schema["$ref"] = f"#/$defs/{command}"
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    if cfg.get("payload") == "bell" and cfg.get("n_qubits", 2) != 2:
        raise ConfigError("payload 'bell' needs n_qubits = 2")
    return cfg


def make_payload(name: str, n: int, rng: np.random.Generator) -> QuantumState:
    one = {
        "zero": [1, 0],
        "one": [0, 1],
        "plus": [1, 1],
        "minus": [1, -1],
        "plus_i": [1, 1j],
    }
    if name == "random":
        return random_state(n, rng)
    if name == "bell":
        return bell_state()
    v = np.array(one[name], dtype=complex)
    v /= np.linalg.norm(v)
    out = v
    for _ in range(n - 1):
        out = np.kron(out, v)
    return QuantumState(out)


# ---------------------------------------------------------------- subcommands


def cmd_roundtrip(cfg: dict) -> tuple[int, str, str]:
    from .protocol import ProtocolConfig, run_protocol

    n = cfg.get("n_qubits", 2 if cfg.get("payload") == "bell" else 1)
    rng = np.random.default_rng(cfg["seed"])
    psi = make_payload(cfg.get("payload", "random"), n, rng)
    tr = run_protocol(psi, ProtocolConfig(n, seed=cfg["seed"]))
    fid = tr.bob_fidelity if tr.bob_fidelity is not None else 0.0
    status = 0 if tr.verdict == "delivered" and fid >= 1 - FIDELITY_TOL else 1
    summary = f"fidelity {fmt(fid)}\nverdict {tr.verdict}\ntranscript {cfg.get('out', '-')}\n"
    return status, tr.to_json(), summary


def _xz(theta: float) -> BlochVector:
    return BlochVector(np.sin(theta), 0.0, np.cos(theta))


def _sweep_points(family: str, grid: int):
    if grid == 0:
        return
    if family == "single_side":
        thetas = np.linspace(0, 2 * np.pi, grid, endpoint=False)
        for tm in thetas:
            for tr in thetas:
                yield (_xz(tm), _xz(tr))
        return
    polar = np.linspace(0, np.pi, grid)
    azim = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    axis = [BlochVector.from_angles(t, p) for t in polar for p in azim]
    idx = np.indices((len(axis),) * 4).reshape(4, -1).T
    for row in idx:
        yield tuple(axis[i] for i in row)


def _sweep_size(family: str, grid: int) -> int:
    return grid**2 if family == "single_side" else grid**8


def _sweep_payload(name: str, vecs) -> QuantumState:
    from .analysis import pair_kernel_entries

    if name == "optimal":
        if len(vecs) == 2:
            name = "zero"
        else:
            _, h = pair_kernel_entries(*vecs)
            name = "plus" if h >= 0 else "minus"
    return make_payload(name, 1, np.random.default_rng(0))


def cmd_attack_sweep(cfg: dict) -> tuple[int, str, str]:
    from .analysis import mc_estimate, pb_exact

    family, grid = cfg["family"], cfg["grid"]
    size = _sweep_size(family, grid)
    cap = cfg.get("max_points", DEFAULT_MAX_POINTS)
    if size > cap:
        raise ConfigError(f"grid {grid} gives {size} points for {family}, above max_points {cap}")
    trials = cfg.get("trials", 0)
    rows = []
    for i, vecs in enumerate(_sweep_points(family, grid)):
        if family == "single_side":
            spec = AttackSpec.ir_single("S", *vecs)
        else:
            spec = AttackSpec.ir_pair(*vecs)
        payload = _sweep_payload(cfg.get("payload", "optimal"), vecs)
        if trials:
            rep = mc_estimate(payload, None, spec, trials, seed=cfg["seed"] + i)
        else:
            rep = pb_exact(payload, None, spec)
        comps = [c for v in vecs for c in (v.x, v.y, v.z)]
        comps += [None] * (12 - len(comps))
        mc = rep.mc_estimate or (None, None, None)
        rows.append([i, family, *comps, rep.closed_form, rep.exact, *mc])
    best = max((r[15] for r in rows), default=None)
    best_cf = max((r[14] for r in rows), default=None)
    if rows:
        rows.append(["max", family] + [None] * 12 + [best_cf, best, None, None, None])
    status = 0 if best is None or best <= 0.75 + BOUND_TOL else 1
    summary = f"points {len(rows) - 1 if rows else 0}\nmax {fmt(best) if best is not None else 'n/a'}\n"
    if cfg.get("format", "csv") == "json":
        return status, dumps([dict(zip(SWEEP_COLUMNS, r)) for r in rows]), summary
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow(["" if v is None else (fmt(v) if isinstance(v, float) else v) for v in r])
    return status, buf.getvalue(), summary


def cmd_bound_search(cfg: dict) -> tuple[int, str, str]:
    from .analysis import maximize_pb

    kw = {k: cfg[k] for k in ("grid", "rounds", "budget", "starts") if k in cfg}
    res = maximize_pb(cfg["objective"], seed=cfg["seed"], **kw)
    status = 0 if res.holds else 1
    summary = f"objective {res.objective}\nmax {fmt(res.max_found)}\nbound {fmt(res.claimed_bound)}\nholds {res.holds}\n"
    return status, dumps(res.to_dict()), summary


def cmd_privacy_amp(cfg: dict) -> tuple[int, str, str]:
    from .analysis import (
        chain_pass_probability,
        ir_bound,
        mc_chain,
        privacy_amplification,
        replacement_pass_probability,
    )

    levels = cfg["levels"]
    rng = np.random.default_rng(cfg["seed"])
    psi1 = make_payload(cfg.get("payload", "random"), 1, rng)
    chain = privacy_amplification(psi1, levels, rng)
    p_ok, out = chain.decrypt()
    honest_fid = fidelity(psi1, out) if out is not None else 0.0
    attack = AttackSpec.from_dict(cfg.get("attack", {"variant": "ir_single", "side": "S", "measure": [0, 0, 1]}))
    replace = chain_pass_probability(psi1, levels, AttackSpec.replace_random())
    attacked = chain_pass_probability(psi1, levels, attack)
    bound = ir_bound(levels)
    report = {
        "levels": levels,
        "total_qubits": chain.total_qubits,
        "signatures_per_level": list(chain.signatures_per_level),
        "honest_pass_probability": p_ok,
        "honest_fidelity": honest_fid,
        "replacement_pass_probability": replace,
        "replacement_expected": replacement_pass_probability(levels),
        "attack": attack.to_dict(),
        "attack_pass_probability": attacked,
        "ir_bound": bound,
        "bound_holds": attacked <= bound + BOUND_TOL if attack.variant in ("ir_single", "ir_pair") else None,
    }
    trials = cfg.get("trials", 0)
    if trials:
        mean, se = mc_chain(psi1, levels, AttackSpec.replace_random(), trials, cfg["seed"])
        report["replacement_mc_mean"], report["replacement_mc_stderr"], report["mc_trials"] = mean, se, trials
    ok = (
        abs(honest_fid - 1) <= FIDELITY_TOL
        and abs(replace - report["replacement_expected"]) <= 1e-9
        and report["bound_holds"] is not False
    )
    summary = (
        f"levels {levels}\ntotal_qubits {chain.total_qubits}\n"
        f"replacement_pass_probability {fmt(replace)}\nattack_pass_probability {fmt(attacked)}\nir_bound {fmt(bound)}\n"
    )
    return (0 if ok else 1), dumps(report), summary


def cmd_scenario(cfg: dict) -> tuple[int, str, str]:
    from .analysis import baseline_check_scheme, blind_eve_fidelity, mc_baseline
    from .protocol import ProtocolConfig, premature_disclosure_scenario, run_protocol

    name = cfg["name"]
    seed = cfg["seed"]
    rng = np.random.default_rng(seed)
    n = cfg.get("n_qubits", 2 if cfg.get("payload") == "bell" else 1)
    if name == "baseline_check":
        nb = cfg.get("baseline_n", 1)
        exact = baseline_check_scheme(nb, rng)
        report = {
            "scenario": name,
            "n": nb,
            "detection_failure_probability": exact,
            "check_position": baseline_check_scheme(nb, target="check"),
            "payload_position": baseline_check_scheme(nb, target="payload"),
        }
        trials = cfg.get("trials", 0)
        if trials:
            report["mc_mean"], report["mc_stderr"] = mc_baseline(nb, trials, seed)
            report["blind_eve_fidelity"], report["blind_eve_stderr"] = blind_eve_fidelity(trials, seed, return_stderr=True)
            report["mc_trials"] = trials
        status = 0 if abs(exact - 0.875) <= 1e-10 else 1
        return status, dumps(report), f"detection_failure_probability {fmt(exact)}\n"
    psi = make_payload(cfg.get("payload", "random"), n, rng)
    if name == "honest":
        tr = run_protocol(psi, ProtocolConfig(n, seed=seed))
        ok = tr.verdict == "delivered" and (tr.bob_fidelity or 0) >= 1 - FIDELITY_TOL
    else:
        early = cfg.get("bob_reports_early", True)
        tr = premature_disclosure_scenario(psi, seed, bob_reports_early=early)
        eve_f = tr.eve_knowledge.get("reconstruction_fidelity")
        ok = (eve_f is not None and eve_f >= 1 - FIDELITY_TOL) if early else tr.eve_knowledge["holds_payload"] is False
    d = {"scenario": name, **tr.to_dict()}
    summary = (
        f"verdict {tr.verdict}\nbob_fidelity {fmt(tr.bob_fidelity) if tr.bob_fidelity is not None else 'n/a'}\n"
        f"eve_fidelity {fmt(tr.eve_knowledge['reconstruction_fidelity']) if tr.eve_knowledge.get('reconstruction_fidelity') is not None else 'n/a'}\n"
    )
    return (0 if ok else 1), dumps(d), summary


def cmd_mc_estimate(cfg: dict) -> tuple[int, str, str]:
    from .analysis import mc_estimate

    n = cfg.get("n_qubits", 2 if cfg.get("payload") == "bell" else 1)
    rng = np.random.default_rng(cfg["seed"])
    psi = make_payload(cfg.get("payload", "random"), n, rng)
    sig = cfg.get("signature")
    if sig is not None and len(sig) != n:
        raise ConfigError(f"signature has {len(sig)} bits for {n} payload qubits")
    spec = AttackSpec.from_dict(cfg["attack"])
    try:
        spec.targets(n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rep = mc_estimate(
        psi,
        Signature(tuple(int(b) for b in sig)) if sig else None,
        spec,
        cfg["trials"],
        cfg["seed"],
        engine=cfg.get("engine", "kernel"),
        random_key=cfg.get("random_key", False),
    )
    mean, se, trials = rep.mc_estimate
    z = (mean - rep.exact) / se if se > 0 else (0.0 if abs(mean - rep.exact) < 1e-12 else float("inf"))
    d = {**rep.to_dict(), "engine": cfg.get("engine", "kernel"), "z_score": z}
    status = 0 if abs(z) <= MC_SIGMA_LIMIT else 1
    return status, dumps(d), f"exact {fmt(rep.exact)}\nmc_mean {fmt(mean)}\nmc_stderr {fmt(se)}\n"


HANDLERS = {
    "roundtrip": cmd_roundtrip,
    "attack-sweep": cmd_attack_sweep,
    "bound-search": cmd_bound_search,
    "privacy-amp": cmd_privacy_amp,
    "scenario": cmd_scenario,
    "mc-estimate": cmd_mc_estimate,
}


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qencipher", description="Quantum-state encryption experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write the result document here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--trials", type=int)
    p.add_argument("--grid", type=int)
    return p


def _assemble(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if cfg.get("command", args.command) != args.command:
            raise ConfigError(f"config is for {cfg['command']!r}, not {args.command!r}")
    for name in ("seed", "out", "format", "trials", "grid"):
        val = getattr(args, name)
        if val is not None:
            cfg[name] = val
    return validate_config(args.command, cfg)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _assemble(args)
        status, document, summary = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"qencipher: error: {exc}", file=sys.stderr)
        return 2
    if "out" in cfg:
        _write(cfg["out"], document)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(document)
    return status


if __name__ == "__main__":
    sys.exit(main())
