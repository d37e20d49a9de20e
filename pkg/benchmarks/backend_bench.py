"""Time the compiled RK4 stepper against the pure-numpy fallback.

Both backends expose the same rk4_block entry point and are exercised
here on the same packed generator and initial state, so the numbers are
directly comparable. Besides throughput the script reports the largest
elementwise difference between the two propagated states; anything
beyond summation-order noise means the backends have diverged.

Run from the repository root:

    python3 benchmarks/backend_bench.py --dim 40 --steps 2000
"""

import argparse
import importlib
import time

import numpy as np

from phonpair import effective_model as em
from phonpair.operators import dm, fock_state
from phonpair.params import SystemParams


def representative_generator(dim: int):
    """Pair-driven resonator generator at the cat operating point."""
    g_hz = 0.6e6 * 6e6 / 100e6
    params = SystemParams.from_hz(
        omega_m=100e6,
        omega_q=200e6,
        omega_d=200e6,
        g_x=0.6e6,
        g_z=6e6,
        Omega=8.0 * g_hz,
        kappa=100e3,
        gamma=15.0,
        n_trunc=dim,
    )
    eff = em.effective_params(params)
    gen = em.build_generator(eff, params)
    dt = em.auto_dt(eff, params)
    return gen, dt


def run_backend(module_name: str, gen, rho0, dt: float, n_steps: int):
    mod = importlib.import_module(module_name)
    rho = np.ascontiguousarray(rho0, dtype=np.complex128)
    # warm the cache and any lazy allocations before timing
    warm = rho.copy()
    mod.rk4_block(
        warm, 0.0, dt, 8,
        gen.h_offs, gen.h_omegas, gen.h_vecs,
        gen.j_rates, gen.j_starts, gen.j_offs, gen.j_vecs,
    )
    start = time.perf_counter()
    mod.rk4_block(
        rho, 0.0, dt, n_steps,
        gen.h_offs, gen.h_omegas, gen.h_vecs,
        gen.j_rates, gen.j_starts, gen.j_offs, gen.j_vecs,
    )
    elapsed = time.perf_counter() - start
    return rho, elapsed


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=40, help="Fock levels")
    ap.add_argument("--steps", type=int, default=2000, help="RK4 steps")
    args = ap.parse_args(argv)

    gen, dt = representative_generator(args.dim)
    rho0 = dm(fock_state(args.dim, 0))

    results = {}
    for label, module in (
        ("compiled", "phonpair._core"),
        ("fallback", "phonpair._fallback"),
    ):
        try:
            rho, elapsed = run_backend(module, gen, rho0, dt, args.steps)
        except ImportError:
            print(f"{label:>9}: not available")
            continue
        results[label] = rho
        rate = args.steps / elapsed
        print(
            f"{label:>9}: {elapsed:8.3f} s for {args.steps} steps "
            f"at dim {args.dim} ({rate:10.1f} steps/s)"
        )

    if len(results) == 2:
        diff = float(np.max(np.abs(results["compiled"] - results["fallback"])))
        scale = float(np.max(np.abs(results["fallback"])))
        print(
            f"largest elementwise difference: {diff:.3e} "
            f"(state scale {scale:.3e})"
        )
        # identical math, different summation order
        ok = diff < 1e-12 * max(1.0, scale)
        print("agreement:", "OK" if ok else "DIVERGED")
        return 0 if ok else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
