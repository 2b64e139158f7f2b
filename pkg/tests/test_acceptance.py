"""Acceptance suite.

Each check returns ``(ok, detail)`` and is evaluated at its stated
tolerance and runtime budget.  Under pytest one line per check is printed in
the terminal summary; ``python3 tests/test_acceptance.py`` prints the same
lines without pytest.
"""

from __future__ import annotations

import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from randbilliards import billiard, chain, cli, diagnostics, feres, geometry, measures
from randbilliards.billiard import PhasePoint
from randbilliards.feres import FeresParams
from randbilliards.geometry import SurfaceKind, make_table

WORKERS = os.cpu_count() or 1
RESULTS: dict[int, tuple[str, bool, str]] = {}


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def probability_normalization():
    def run():
        theta = np.linspace(0.0, math.pi, 10_002)[1:-1]
        worst = 0.0
        for a in np.linspace(0.01, math.pi / 6 - 0.01, 50):
            p = feres.branch_probabilities(FeresParams(a), theta)
            worst = max(worst, float(np.abs(p.sum(axis=-1) - 1.0).max()))
        return worst

    worst, dt = _timed(run)
    return worst < 1e-12 and dt < 1.0, f"max |sum p - 1| = {worst:.1e}, {dt:.2f} s"


def kernel_invariance():
    def run():
        rng = np.random.default_rng(20)
        worst = 0.0
        for _ in range(100):
            params = FeresParams(rng.uniform(0.01, math.pi / 6 - 0.01))
            a, b = np.sort(rng.uniform(0.0, math.pi, 2))
            worst = max(worst, abs(measures.pushforward_mass(params, (a, b)) - measures.liouville_mass(a, b)))
        return worst

    worst, dt = _timed(run)
    return worst < 1e-8 and dt < 10.0, f"max |int K(., A) dmu - mu(A)| = {worst:.1e}, {dt:.2f} s"


def chain_examples():
    out = []
    for (m, n), theta0, size, period in (((1, 8), math.pi / 16, 8, 2), ((1, 7), math.pi / 14, 7, 1)):
        params = FeresParams.rational(m, n)
        states = chain.enumerate_states(params, theta0)
        P = chain.build_matrix(states, params)
        got = (len(states), chain.is_irreducible(P), chain.chain_period(P))
        out.append((got == (size, True, period), f"pi/{n}: {got[0]} states, irreducible={got[1]}, period {got[2]}"))
    return all(ok for ok, _ in out), "; ".join(d for _, d in out)


def geometry_oracle():
    def run():
        rng = np.random.default_rng(21)
        kinds = list(SurfaceKind)
        err_g = err_d = 0.0
        for _ in range(1000):
            kind = kinds[rng.integers(3)]
            r0 = rng.uniform(0.01, 1.55) if kind is SurfaceKind.SPHERICAL else rng.uniform(0.01, 3.0)
            table = make_table(kind, r0)
            t = rng.uniform(0.01, math.pi - 0.01)
            err_g = max(err_g, abs(geometry.central_angle(table, t) - geometry.chord_oracle(table, t)))
            d = 1e-6
            fd = (geometry.central_angle(table, t + d) - geometry.central_angle(table, t - d)) / (2 * d)
            g = geometry.central_angle_derivative(table, t)
            err_d = max(err_d, abs(fd - g) / g)
        theta = np.linspace(0.0, math.pi, 1002)[1:-1]
        err_flat = max(float(np.abs(geometry.central_angle(make_table(k, 1e-4), theta) - 2 * theta).max())
                       for k in kinds)
        return err_g, err_d, err_flat

    (err_g, err_d, err_flat), dt = _timed(run)
    ok = err_g < 1e-9 and err_d < 1e-6 and err_flat < 1e-6 and dt < 5.0
    return ok, f"oracle {err_g:.1e}, gamma' rel {err_d:.1e}, flat limit {err_flat:.1e}, {dt:.2f} s"


def knudsen_dichotomy():
    def run():
        tv_irr = measures.knudsen_run(FeresParams(0.5), measures.uniform_histogram(2000), 200)[-1]
        p8 = FeresParams.rational(1, 8)
        theta0 = math.pi / 16
        states = chain.enumerate_states(p8, theta0)
        # closed under every positive-probability branch, or build_matrix would raise
        chain.build_matrix(states, p8)
        mu = measures.liouville_histogram(2000)
        d = None
        worst = 1.0
        for n in (1, 10, 100, 1000):
            d = measures.chain_evolution(p8, theta0, None, n)
            h = measures.atomic_histogram(states.angles, d, 2000)
            worst = min(worst, measures.tv_distance(h, mu))
        return tv_irr, len(states), worst

    (tv_irr, n_states, tv_rat), dt = _timed(run)
    ok = tv_irr < 0.01 and n_states == 8 and tv_rat > 0.9 and dt < 60.0
    return ok, f"alpha=0.5 TV(200) = {tv_irr:.5f}; pi/8: {n_states} states, min TV = {tv_rat:.4f}; {dt:.1f} s"


def _half_density(theta):
    return 2.0 * (np.asarray(theta) < math.pi / 2)


def strong_knudsen():
    def run():
        return measures.phase_knudsen(make_table("flat", 1.0), FeresParams(0.5), 1_000_000, 100, seed=0,
                                      density=_half_density, density_max=2.0, workers=WORKERS)

    res, dt = _timed(run)
    z = np.abs(res.s_uniformity_z)
    ok = res.tv[-1] < 0.02 and bool(np.all(z < 3.0)) and dt < 300.0
    return ok, (f"final TV = {res.tv[-1]:.4f}, max |z| of s-marginal = {z.max():.2f} "
                f"over {len(z)} checkpoints, {dt:.1f} s")


def zero_lyapunov():
    def run():
        tables = [make_table("flat", 1.0), make_table("hyperbolic", 1.0), make_table("spherical", math.pi / 4)]
        worst, exact = 0.0, True
        for table in tables:
            for params in (FeresParams.rational(1, 8), FeresParams(0.5)):
                for seed in range(20):
                    rng = np.random.default_rng(1000 + seed)
                    p0 = PhasePoint(float(rng.uniform(0, table.L)), float(rng.uniform(0.05, math.pi - 0.05)))
                    traj = billiard.simulate(table, params, p0, 100_000, seed)
                    vert = diagnostics.lyapunov_from_path(table, traj, (0.0, 1.0))
                    horiz = diagnostics.lyapunov_from_path(table, traj, (1.0, 0.0))
                    worst = max(worst, abs(float(vert.lambda_n[-1])))
                    exact &= bool(np.all(horiz.lambda_n == 0.0))
        return worst, exact

    (worst, exact), dt = _timed(run)
    ok = worst < 5e-3 and exact and dt < 120.0
    return ok, f"max |lambda_n| = {worst:.2e} over 120 runs, (1,0) exact zero: {exact}, {dt:.1f} s"


def dense_orbits():
    def run():
        table = make_table("flat", 1.0)
        p8 = FeresParams.rational(1, 8)
        p0 = PhasePoint(0.0, 1.0)
        gaps = diagnostics.dense_orbit_test(table, p8, p0, 10_000)
        traj = billiard.simulate_word(table, p8, p0, (1, 3) * 10_000)
        k = np.arange(1, 10_001)
        closed = np.mod(p0.s + k * diagnostics.pair_advance(table, p8, p0.theta), table.L)
        diff = np.abs(traj.s[1::2] - closed)
        return gaps[-1][1], float(np.minimum(diff, table.L - diff).max()), table.L

    (gap, err, L), dt = _timed(run)
    ok = gap < L / 500 and err < 1e-6 and dt < 10.0
    return ok, f"gap = {gap:.5f} (L/500 = {L / 500:.5f}), closed form error = {err:.1e}, {dt:.2f} s"


def mixing_dichotomy():
    def run():
        table = make_table("flat", 1.0)
        q = diagnostics.quarter_region(table)
        irr = diagnostics.mixing_correlation(table, FeresParams(0.5), q, q, [50], 1_000_000, seed=0,
                                             workers=WORKERS)
        p8 = FeresParams.rational(1, 8)
        lat = diagnostics.lattice_region(table, p8, math.pi / 16)
        rat = diagnostics.mixing_correlation(table, p8, lat, lat, [1, 10, 50], 1_000_000, seed=0,
                                             workers=WORKERS)
        return irr, rat

    (irr, rat), dt = _timed(run)
    z_irr = float(irr.estimates[0] / irr.std_errors[0])
    z_rat = rat.estimates / rat.std_errors
    ok = z_irr < 3.0 and bool(np.all(z_rat > 5.0)) and dt < 300.0
    return ok, (f"alpha=0.5 lag 50: C = {irr.estimates[0]:.2e} = {z_irr:.2f} SE; "
                f"pi/8 lattice min {z_rat.min():.0f} SE; {dt:.1f} s")


def pseudo_integrability():
    def run():
        table = make_table("flat", 1.0)
        bad = 0
        for n in (7, 8, 10):
            params = FeresParams.rational(1, n)
            rng = np.random.default_rng(n)
            for seed in range(20):
                p0 = PhasePoint(0.0, float(rng.uniform(0.01, math.pi - 0.01)))
                traj = billiard.simulate(table, params, p0, 10_000, seed)
                bad += not diagnostics.motion_constant_check(params, traj, tol=1e-9)
        return bad

    bad, dt = _timed(run)
    return bad == 0 and dt < 10.0, f"{bad} of 60 trajectories changed class, {dt:.2f} s"


def reproducibility():
    commands = [
        ("simulate", ["--surface", "spherical", "--r0", "0.8", "--alpha", "0.5", "--n-steps", "5000"],
         ("trajectory.csv", "trajectory.jsonl")),
        ("evolve", ["--alpha", "0.5", "--bins", "500", "--n-steps", "50"], ("evolve_trace.csv", "evolve_final.csv")),
        ("phase-evolve", ["--start", "half", "--ensemble", "100000", "--n-steps", "5"], ("phase_trace.csv",)),
        ("lyapunov", ["--alpha", "1/8", "--n-steps", "5000"], ("lyapunov.csv",)),
        ("mixing", ["--ensemble", "100000", "--lags", "0,1,5"], ("mixing.csv",)),
        ("dense", ["--alpha", "1/8", "--n-steps", "500"], ("dense.csv",)),
    ]
    compared = 0
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        for cmd, args, files in commands:
            runs = []
            for tag in ("a", "b"):
                out = Path(tmp) / cmd / tag
                with open(os.devnull, "w") as sink:
                    saved, sys.stdout = sys.stdout, sink
                    try:
                        code = cli.main([cmd, *args, "--seed", "123", "--out", str(out)])
                    finally:
                        sys.stdout = saved
                if code != 0:
                    return False, f"{cmd} exited with {code}"
                runs.append([(out / f).read_bytes() for f in files])
            for name, x, y in zip(files, *runs):
                compared += 1
                if x != y:
                    mismatched.append(name)
    return not mismatched, f"{compared} files compared, mismatched: {mismatched or 'none'}"


CRITERIA = [
    (1, "probability normalization", probability_normalization),
    (2, "kernel invariance", kernel_invariance),
    (3, "finite chain examples", chain_examples),
    (4, "geometry oracle", geometry_oracle),
    (5, "Knudsen dichotomy", knudsen_dichotomy),
    (6, "strong Knudsen law", strong_knudsen),
    (7, "zero Lyapunov exponents", zero_lyapunov),
    (8, "dense orbits", dense_orbits),
    (9, "mixing dichotomy", mixing_dichotomy),
    (10, "pseudo-integrability", pseudo_integrability),
    (11, "reproducibility", reproducibility),
]


def evaluate(k, name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # report, then let pytest see the failure
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    RESULTS[k] = (name, bool(ok), detail)
    return bool(ok), detail


def format_line(k):
    name, ok, detail = RESULTS[k]
    return f"acceptance {k:>2} {name:<26} {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.slow
@pytest.mark.parametrize("k,name,fn", CRITERIA, ids=[c[1].replace(" ", "_") for c in CRITERIA])
def test_acceptance(k, name, fn):
    ok, detail = evaluate(k, name, fn)
    assert ok, detail


if __name__ == "__main__":
    for k, name, fn in CRITERIA:
        evaluate(k, name, fn)
        print(format_line(k), flush=True)
    sys.exit(0 if all(ok for _, ok, _ in RESULTS.values()) else 1)
