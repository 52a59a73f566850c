"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the probe-word search (exhaustive family, one ancilla) and the
trajectory sampler (single-side intercept/resend, 1e5 runs) on both
backends and checks that they return identical results.
"""
import argparse
import time

import numpy as np

from qencipher import kernels
from qencipher.analysis.montecarlo import kernel_pass_hits
from qencipher.attacks import AttackSpec
from qencipher.probe import ProbeFamily, probe_attack_search
from qencipher.qcore import QuantumState


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-len", type=int, default=5, help="probe word length (6 is the full search)")
    ap.add_argument("--trials", type=int, default=100_000)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not available; timing the numpy fallback only")
    fam = ProbeFamily.exhaustive(n_ancillas=1, max_len=args.max_len)
    psi = QuantumState.basis("0")
    spec = AttackSpec.ir_single("S")

    results = {}
    for b in backends:
        t_probe, table = best_of(lambda: probe_attack_search(fam, backend=b), args.repeat)
        t_traj, hits = best_of(
            lambda: kernel_pass_hits(psi, None, spec, args.trials, np.random.default_rng(0), backend=b), args.repeat
        )
        results[b] = (t_probe, np.asarray(table.values), t_traj, hits)

    print(f"{'kernel':<28}{'backend':<10}{'seconds':>10}")
    for b, (tp, _, tt, _) in results.items():
        print(f"{'probe search (' + str(fam.size()) + ' words)':<28}{b:<10}{tp:>10.4f}")
        print(f"{'trajectories (' + str(args.trials) + ')':<28}{b:<10}{tt:>10.4f}")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speedup: probe search x{py[0] / cy[0]:.1f}, trajectories x{py[2] / cy[2]:.1f}")
        assert np.abs(py[1] - cy[1]).max() <= 1e-12, "probe values differ between backends"
        assert np.array_equal(py[3], cy[3]), "trajectory outcomes differ between backends"
        print("backends agree")


if __name__ == "__main__":
    main()
