"""Fast invariant suite behind the ``verify`` subcommand.

Each check returns ``(ok, detail)``.  Checks are deterministic (fixed seeds)
and together run in well under a minute; the Monte Carlo heavy experiments
live in the acceptance tests instead.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import billiard, chain, diagnostics, feres, geometry, measures
from .billiard import PhasePoint
from .feres import FeresParams
from .geometry import SurfaceKind, make_table

__all__ = ["CHECKS", "run_checks"]

_KINDS = (SurfaceKind.FLAT, SurfaceKind.HYPERBOLIC, SurfaceKind.SPHERICAL)


def _random_tables(rng, k):
    out = []
    for _ in range(k):
        kind = _KINDS[rng.integers(3)]
        r0 = rng.uniform(0.05, 1.5) if kind is SurfaceKind.SPHERICAL else rng.uniform(0.05, 3.0)
        out.append(make_table(kind, r0))
    return out


def check_geometry_oracle():
    rng = np.random.default_rng(11)
    worst = 0.0
    for table in _random_tables(rng, 200):
        t = float(rng.uniform(1e-3, math.pi - 1e-3))
        g = geometry.central_angle(table, t)
        o = geometry.chord_oracle(table, t)
        worst = max(worst, abs((g - o + math.pi) % (2 * math.pi) - math.pi))
    return worst < 1e-9, f"max |gamma - oracle| = {worst:.2e}"


def check_geometry_symmetry():
    rng = np.random.default_rng(12)
    worst = 0.0
    for table in _random_tables(rng, 20):
        t = rng.uniform(1e-6, math.pi - 1e-6, 50)
        worst = max(worst, np.abs(geometry.central_angle(table, t)
                                  + geometry.central_angle(table, math.pi - t) - 2 * math.pi).max())
    return worst < 1e-12, f"max |gamma(pi-t) + gamma(t) - 2pi| = {worst:.2e}"


def check_derivative():
    rng = np.random.default_rng(13)
    worst = 0.0
    for table in _random_tables(rng, 200):
        t = float(rng.uniform(0.01, math.pi - 0.01))
        d = 1e-6
        fd = (geometry.central_angle(table, t + d) - geometry.central_angle(table, t - d)) / (2 * d)
        g = geometry.central_angle_derivative(table, t)
        worst = max(worst, abs(fd - g) / g)
    return worst < 1e-6, f"max relative error = {worst:.2e}"


def _alphas(k=50):
    return np.linspace(0.01, math.pi / 6 - 0.01, k)


def check_normalization():
    theta = np.linspace(0.0, math.pi, 10_002)[1:-1]
    worst = 0.0
    for a in _alphas():
        p = feres.branch_probabilities(FeresParams(a), theta)
        worst = max(worst, np.abs(p.sum(axis=-1) - 1.0).max())
    return worst < 1e-12, f"max |sum p - 1| = {worst:.2e}"


def check_positivity_support():
    theta = np.linspace(0.0, math.pi, 10_002)[1:-1]
    bad = 0
    for a in _alphas():
        params = FeresParams(a)
        p = feres.branch_probabilities(params, theta)
        for i in (1, 2, 3, 4):
            img = feres.apply_branches(params, np.full(theta.shape, i), theta)
            pos = p[:, i - 1] > 0.0
            bad += int(np.count_nonzero(pos & ((img < 0.0) | (img > math.pi))))
    return bad == 0, f"{bad} positive branches leave [0, pi]"


def check_involutions():
    rng = np.random.default_rng(14)
    worst = 0.0
    for _ in range(1000):
        params = FeresParams(rng.uniform(0.01, math.pi / 6 - 0.01))
        t = rng.uniform(0.01, math.pi - 0.01)
        A = lambda i, x: feres.apply_branch(i, params, x)  # noqa: E731
        worst = max(worst, abs(A(1, A(3, t)) - t), abs(A(3, A(1, t)) - t),
                    abs(A(2, A(2, t)) - t), abs(A(4, A(4, t)) - t))
    return worst < 1e-12, f"max deviation = {worst:.2e}"


def check_kernel_invariance():
    rng = np.random.default_rng(15)
    worst = 0.0
    for _ in range(20):
        params = FeresParams(rng.uniform(0.02, math.pi / 6 - 0.02))
        a, b = np.sort(rng.uniform(0.0, math.pi, 2))
        worst = max(worst, abs(measures.pushforward_mass(params, (a, b)) - measures.liouville_mass(a, b)))
    return worst < 1e-8, f"max |K mu(A) - mu(A)| = {worst:.2e}"


def check_chain_examples():
    ok = True
    info = []
    for (m, n), theta0, size, period in (((1, 8), math.pi / 16, 8, 2), ((1, 7), math.pi / 14, 7, 1)):
        params = FeresParams.rational(m, n)
        states = chain.enumerate_states(params, theta0, 64)
        P = chain.build_matrix(states, params)
        irr = chain.is_irreducible(P)
        per = chain.chain_period(P) if irr else None
        pi = chain.stationary(P)
        res = np.abs(pi @ P - pi).sum()
        ok &= (len(states) == size and not states.truncated and irr and per == period and res < 1e-12)
        info.append(f"{m}/{n}: {len(states)} states, period {per}")
    trunc = chain.enumerate_states(FeresParams(0.5), 1.0, 1000)
    ok &= trunc.truncated and len(trunc) == 1000
    return bool(ok), "; ".join(info)


def check_fold_invariance():
    worst = 0.0
    for n in (7, 8, 9, 10, 12):
        params = FeresParams.rational(1, n)
        for t in np.linspace(0.05, math.pi - 0.05, 40):
            ref = chain.class_representative(params, float(t))
            p = feres.branch_distribution(params, float(t))
            for i in (1, 2, 3, 4):
                img = feres.apply_branch(i, params, float(t))
                if p[i - 1] > 0 and 0.0 < img < math.pi:
                    worst = max(worst, abs(chain.class_representative(params, img) - ref))
    return worst < 1e-12, f"max fold change = {worst:.2e}"


def check_reduction():
    params = FeresParams.rational(1, 8)
    bad = 0
    for t in np.linspace(0.01, math.pi - 0.01, 200):
        w = chain.reduce_to_fundamental(params, float(t))
        limit = math.ceil(math.pi / (2 * params.alpha)) + 2
        end = feres.apply_word(params, float(t), w) if w else float(t)
        if len(w) > limit or not (0.0 <= end <= params.alpha + 1e-12):
            bad += 1
        elif w and not feres.is_almost_admissible(params, float(t), w):
            bad += 1
    return bad == 0, f"{bad} failures"


def check_transfer_fixed_point():
    worst = 0.0
    mu = measures.liouville_histogram(2000)
    for a in np.linspace(0.05, math.pi / 6 - 0.02, 5):
        out = measures.evolve_kernel(FeresParams(a), mu)
        worst = max(worst, measures.tv_distance(out, mu))
    return worst < 1e-6, f"max TV(K mu, mu) = {worst:.2e}"


def check_mass_conservation():
    params = FeresParams(0.5)
    h = measures.uniform_histogram(500)
    worst = 0.0
    for _ in range(20):
        h = measures.evolve_kernel(params, h)
        worst = max(worst, abs(h.masses.sum() - 1.0))
    return worst < 1e-12 and bool(np.all(h.masses >= 0)), f"max |mass - 1| = {worst:.2e}"


def check_reproducibility():
    table = make_table("spherical", math.pi / 4)
    params = FeresParams(0.5)
    p0 = PhasePoint(0.3, 1.2)
    a = billiard.simulate(table, params, p0, 2000, 99)
    b = billiard.simulate(table, params, p0, 2000, 99)
    u = billiard.make_rng(99).random(2000)
    t, angles = p0.theta, []
    for x in u:
        t, _ = feres.step(params, t, float(x))
        angles.append(t)
    return a == b and np.array_equal(a.theta, np.array(angles)), "simulate replays bit-for-bit"


def check_orbit_closure():
    params = FeresParams.rational(1, 8)
    states = chain.enumerate_states(params, math.pi / 16, 64)
    traj = billiard.simulate(make_table("flat", 1.0), params, PhasePoint(0.0, math.pi / 16), 10_000, 5)
    dist = np.abs(traj.theta[:, None] - states.angles[None, :]).min(axis=1)
    return float(dist.max()) < 1e-9, f"max distance to a state = {dist.max():.2e}"


def check_lyapunov():
    params = FeresParams.rational(1, 8)
    table = make_table("hyperbolic", 1.0)
    horiz = diagnostics.lyapunov(table, params, PhasePoint(0.0, 1.0), (1, 0), 20_000, 3)
    vert = diagnostics.lyapunov(table, params, PhasePoint(0.0, 1.0), (0, 1), 20_000, 3)
    ok = bool(np.all(horiz.lambda_n == 0.0)) and abs(vert.lambda_n[-1]) < 5e-3
    return ok, f"lambda_n(0,1) = {vert.lambda_n[-1]:.2e}"


def check_cover_gap():
    L = 2 * math.pi
    g = diagnostics.cover_gap(np.arange(100) * L / 100, L)
    table = make_table("flat", 1.0)
    gaps = [x for _, x in diagnostics.dense_orbit_test(table, FeresParams.rational(1, 8), PhasePoint(0.0, 1.0), 2000)]
    ok = abs(g - L / 100) < 1e-12 and all(b <= a for a, b in zip(gaps, gaps[1:]))
    return ok, f"final gap {gaps[-1]:.3e}"


def check_motion_constant():
    table = make_table("flat", 1.0)
    rng = np.random.default_rng(16)
    bad = 0
    for n in (7, 8, 9, 10, 12):
        params = FeresParams.rational(1, n)
        for j in range(4):
            p0 = PhasePoint(0.0, float(rng.uniform(0.01, math.pi - 0.01)))
            traj = billiard.simulate(table, params, p0, 2000, 100 * n + j)
            bad += not diagnostics.motion_constant_check(params, traj)
    return bad == 0, f"{bad} trajectories changed class"


def check_skew_projection():
    table = make_table("flat", 1.0)
    params = FeresParams(0.5)
    rng = np.random.default_rng(17)
    bad = 0
    for _ in range(500):
        s, t, x = rng.uniform(0, table.L), rng.uniform(0.01, math.pi - 0.01), rng.random()
        sk = billiard.skew_step(table, params, billiard.SkewPoint(x, s, t))
        p, _ = billiard.random_step(table, params, PhasePoint(s, t), x)
        bad += not (sk.s == p.s and sk.theta == p.theta and 0.0 <= sk.x < 1.0)
    return bad == 0, f"{bad} mismatches"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "geometry_oracle": check_geometry_oracle,
    "geometry_symmetry": check_geometry_symmetry,
    "geometry_derivative": check_derivative,
    "probability_normalization": check_normalization,
    "positivity_support": check_positivity_support,
    "branch_involutions": check_involutions,
    "kernel_invariance": check_kernel_invariance,
    "chain_examples": check_chain_examples,
    "fold_invariance": check_fold_invariance,
    "reduction_word": check_reduction,
    "transfer_fixed_point": check_transfer_fixed_point,
    "mass_conservation": check_mass_conservation,
    "reproducibility": check_reproducibility,
    "orbit_closure": check_orbit_closure,
    "lyapunov_zero": check_lyapunov,
    "cover_gap": check_cover_gap,
    "motion_constant": check_motion_constant,
    "skew_projection": check_skew_projection,
}


def run_checks(names=None) -> list[tuple[str, bool, str]]:
    """Run the named checks (all by default); an exception counts as a failure."""
    results = []
    for name in names or CHECKS:
        try:
            ok, detail = CHECKS[name]()
        except Exception as exc:  # reported, not raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
