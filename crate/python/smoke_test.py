#!/usr/bin/env python3
"""Smoke test for the spinframe_py extension module.

Builds nothing itself: run `cargo build -p spinframe-py --release` first,
then `python3 python/smoke_test.py`. The script locates the compiled
cdylib, exposes it as an importable module, and checks a handful of known
values end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libspinframe_py.so",
        REPO / "target" / "debug" / "libspinframe_py.so",
        REPO / "target" / "release" / "libspinframe_py.dylib",
        REPO / "target" / "debug" / "libspinframe_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "spinframe_py cdylib not found; run "
            "`cargo build -p spinframe-py --release` first"
        )
    stage = Path(tempfile.mkdtemp(prefix="spinframe_py_"))
    suffix = ".so" if built.suffix == ".so" else ".so"  # CPython loads .so on mac too
    shutil.copy2(built, stage / f"spinframe_py{suffix}")
    sys.path.insert(0, str(stage))
    import spinframe_py

    return spinframe_py


def approx(actual, expected, tol, label):
    if abs(actual - expected) > tol:
        sys.exit(f"FAIL {label}: {actual!r} vs {expected!r} (tol {tol})")
    print(f"ok {label}: {actual:.12g}")


def main():
    sf = load_module()
    print(f"loaded spinframe_py {sf.__version__}")

    approx(sf.hilbert_dim(4), 9, 0, "hilbert_dim(4)")
    approx(sf.mp_baseline(10), 11.0 / 12.0, 1e-15, "mp_baseline(10)")
    approx(sf.jacobi_poly(1, 0, 0, 0.7), 0.7, 1e-15, "jacobi_poly P_1")

    # opposite-spin improvement at N=2
    sol = sf.direction_solve(2)
    approx(sol.fidelity, (1 + 1 / math.sqrt(3)) / 2, 1e-12, "direction fidelity N=2")
    norm = sum(c * c for c in sol.coeffs)
    approx(norm, 1.0, 1e-12, "signal normalized")

    # the outcome density integrates to 1 over [-1, 1]
    nodes, weights = sf.gauss_legendre(20)
    total = sum(w * sol.density(x) for x, w in zip(nodes, weights))
    approx(total, 1.0, 1e-10, "outcome density normalized")

    # odd N defaults to m = 1/2
    sol1 = sf.direction_solve(1)
    approx(sol1.fidelity, 2.0 / 3.0, 1e-12, "direction fidelity N=1")
    approx(sol1.m, 0.5, 0, "default m for odd N")

    # Wigner small-d at j=1/2 is the plane rotation by beta/2
    d = sf.wigner_small_d("1/2", math.pi / 3)
    approx(d[0][0], math.cos(math.pi / 6), 1e-14, "d^{1/2}_{++}")
    approx(d[0][1], -math.sin(math.pi / 6), 1e-14, "d^{1/2}_{+-}")

    # POVM resolution of identity
    dev = sf.povm_completeness_check(2, quad_order=30, phi_points=32)
    if dev > 1e-10:
        sys.exit(f"FAIL povm completeness: deviation {dev}")
    print(f"ok povm completeness: {dev:.2e}")

    # frame optimum at n=2 equals the direction optimum at N=2
    fr = sf.frame_optimize(2, merit="z", restarts=2)
    if not fr.converged:
        sys.exit("FAIL frame_optimize(2, z) did not converge")
    approx(fr.merit, 1 / math.sqrt(3), 1e-10, "frame z merit n=2")
    check = sf.merit_expectation(2, "z", fr.alice, fr.bob)
    approx(check, fr.merit, 1e-10, "merit_expectation consistency")

    # split strategy beats the collective measurement
    split, collective, reference = sf.split_strategy_compare(8)
    if not split < collective:
        sys.exit(f"FAIL split {split} not below collective {collective}")
    print(f"ok split {split:.6f} < collective {collective:.6f} (ref {reference:.6f})")

    # seeded simulation: accurate and reproducible
    est = sf.simulate_direction(4, shots=50_000, seed=7, workers=2)
    if est.sigma_distance > 4.0:
        sys.exit(f"FAIL simulate_direction sigma {est.sigma_distance}")
    again = sf.simulate_direction(4, shots=50_000, seed=7)
    if est.mean != again.mean:
        sys.exit("FAIL simulation not reproducible across worker counts")
    print(f"ok simulate_direction: mean {est.mean:.6f} sigma {est.sigma_distance:.2f}")

    est = sf.simulate_frame(2, "z", shots=20_000, seed=1)
    if est.sigma_distance > 4.0:
        sys.exit(f"FAIL simulate_frame sigma {est.sigma_distance}")
    print(f"ok simulate_frame: mean {est.mean:.6f} sigma {est.sigma_distance:.2f}")

    nodes, weights = sf.gauss_legendre(2)
    approx(nodes[1], 1 / math.sqrt(3), 1e-15, "gauss_legendre node")
    approx(sum(weights), 2.0, 1e-14, "gauss_legendre weight sum")

    print("SMOKE TEST PASSED")


if __name__ == "__main__":
    main()
