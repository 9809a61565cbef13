"""Smoke test for the optokap Python extension.

Build the module first, for example with
``maturin develop -m crates/python/Cargo.toml``, then run
``python python/smoke_test.py``.
"""

import math
import tempfile

import optokap


def main():
    params = optokap.SystemParams.reference()
    p0 = 1260.0
    print(params)
    print("critical power:", params.critical_power())
    print("well radius at P0:", optokap.static_wells(params, p0))

    threshold = optokap.stability_threshold(params, p0, 1.8) / p0
    print(f"stabilizing A/P0 at Omega = 1.8: {threshold:.4f}")
    assert abs(threshold - 0.2259) < 1e-3

    drive = optokap.Modulation(p0, 1.0, 1.8)
    print(f"curvature D at A/P0 = 1: {optokap.curvature(params, drive):.4f}")

    run = optokap.run_ensemble(optokap.SystemParams(gamma=0.02), drive, n_traj=100, t_end=20.0, dt=1e-3, seed=1)
    print(f"classical ensemble: mean |x| = {run.mean_abs_x():.3f}, escaped = {run.escaped}")

    rho = optokap.DensityMatrix.ground_state(params, 96, 12.0)
    final = rho.evolve(optokap.SystemParams(gamma=0.02), optokap.Modulation(0.0), 2 * math.pi)[-1]
    mean_x, mean_x2 = final.moments()
    print(f"quantum: trace = {final.trace():.12f}, purity = {final.purity():.6f}, <x^2> = {mean_x2:.6f}")
    assert abs(final.trace() - 1.0) < 1e-8
    x, p, w = final.wigner()
    print(f"Wigner grid {len(x)} x {len(p)}, peak {max(map(max, w)):.4f}")

    with tempfile.TemporaryDirectory() as out:
        observables, checks = optokap.run("stability", out, preset="fig2")
        print("fig2 observables:", {k: round(v, 6) for k, v in observables.items()})
        assert all(checks.values()), checks

    print("ok")


if __name__ == "__main__":
    main()
