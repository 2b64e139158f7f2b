"""Dynamical diagnostics for the random circular billiard.

Lyapunov exponents from the derivative cocycle, circular cover gaps of
boundary positions, correlation estimates for indicator observables and the
fold motion constant available when ``alpha = pi/n``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import billiard, chain, feres, geometry
from .billiard import PhasePoint, TrajectoryRecord
from .errors import InvariantError, NotAdmissible, TooFewPoints, UnsupportedAlphaForm
from .feres import FeresParams
from .geometry import CircleTable
from .measures import liouville_mass

__all__ = [
    "LyapunovTrace",
    "CorrelationTrace",
    "Region",
    "cocycle_path",
    "lyapunov",
    "lyapunov_from_path",
    "log_checkpoints",
    "cover_gap",
    "pair_advance",
    "dense_orbit_test",
    "quarter_region",
    "lattice_region",
    "mixing_correlation",
    "motion_constant_check",
]


@dataclass(frozen=True)
class LyapunovTrace:
    checkpoints: np.ndarray
    lambda_n: np.ndarray
    direction: tuple[float, float]
    seed: int

    def __post_init__(self):
        if np.any(np.diff(self.checkpoints) <= 0):
            raise ValueError("checkpoints must be strictly increasing")


@dataclass(frozen=True)
class CorrelationTrace:
    lags: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    ensemble: int

    def __post_init__(self):
        if not len(self.lags) == len(self.estimates) == len(self.std_errors):
            raise ValueError("lags, estimates and std_errors must have equal lengths")


# -- Lyapunov exponents ----------------------------------------------------------


def cocycle_path(table: CircleTable, traj: TrajectoryRecord) -> tuple[np.ndarray, np.ndarray]:
    """``(A_k, B_k)`` for ``k = 1..n`` along a recorded trajectory.

    Same recursion as :func:`randbilliards.billiard.cocycle_step`, vectorised:
    ``B_k`` is the running product of branch slopes and ``A_k`` the running
    sum of ``gamma'(theta_k) B_k``.  The bound ``|A_k| <= k max gamma'`` is
    checked at every step.
    """
    slopes = np.where(np.isin(traj.branch, (2, 4)), -1, 1).astype(np.int64)
    B = np.cumprod(slopes)
    A = np.cumsum(geometry._gamma_prime(table, traj.theta) * B)
    k = np.arange(1, len(A) + 1)
    if np.any(np.abs(A) > k * table.max_derivative * (1.0 + 1e-12)):
        raise InvariantError("cocycle entry A_n exceeds n * max gamma'")
    return A, B


def log_checkpoints(n: int, count: int = 40) -> np.ndarray:
    """About ``count`` logarithmically spaced integers in ``[1, n]``, always ending at ``n``."""
    pts = np.unique(np.geomspace(1, n, num=count).round().astype(np.int64))
    if pts[-1] != n:
        pts = np.append(pts, n)
    return pts


def lyapunov(table: CircleTable, params: FeresParams, p0: PhasePoint, v, n: int, seed: int,
             checkpoints: Sequence[int] | None = None) -> LyapunovTrace:
    """Finite-time exponents ``(1/n) log |D_n v|`` along a seeded trajectory.

    ``D_n = [[1, A_n h], [0, B_n]]``.  The trajectory is the one produced by
    :func:`randbilliards.billiard.simulate` with the same ``seed``.
    """
    traj = billiard.simulate(table, params, p0, n, seed)
    return lyapunov_from_path(table, traj, v, checkpoints)


def lyapunov_from_path(table: CircleTable, traj: TrajectoryRecord, v,
                       checkpoints: Sequence[int] | None = None) -> LyapunovTrace:
    """Same as :func:`lyapunov` for an already simulated trajectory."""
    v1, v2 = (float(x) for x in v)
    if v1 == 0.0 and v2 == 0.0:
        raise ValueError("direction must be non-zero")
    A, B = cocycle_path(table, traj)
    n = len(traj)
    ks = log_checkpoints(n) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    a, b = A[ks - 1], B[ks - 1]
    lam = np.log(np.hypot(v1 + a * table.h * v2, b * v2)) / ks
    return LyapunovTrace(ks, lam, (v1, v2), traj.seed)


# -- dense orbits -----------------------------------------------------------------


def cover_gap(positions, L: float) -> float:
    """Largest circular gap between consecutive positions on ``[0, L)``."""
    x = np.sort(np.asarray(positions, dtype=float))
    if len(x) < 2:
        raise TooFewPoints("need at least two positions")
    inner = np.diff(x).max()
    return float(max(inner, L - x[-1] + x[0]))


def pair_advance(table: CircleTable, params: FeresParams, theta: float) -> float:
    """Arc covered by one ``(1, 3)`` pair: ``l(gamma(theta + 2 alpha)) + l(gamma(theta))``."""
    return float(geometry.flight_arc(table, theta + 2 * params.alpha) + geometry.flight_arc(table, theta))


def dense_orbit_test(table: CircleTable, params: FeresParams, p0: PhasePoint,
                     n_pairs: int) -> list[tuple[int, float]]:
    """Cover gaps of the ``(1, 3)^n`` orbit at ``n = 1, 2, 4, ...`` and ``n = n_pairs``.

    The gap at ``n`` pairs counts ``s0`` and all ``2n`` visited positions.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    if not 0.0 < p0.theta < math.pi - 2 * params.alpha:
        raise NotAdmissible(f"(1,3) does not repeat from theta={p0.theta}")
    traj = billiard.simulate_word(table, params, p0, (1, 3) * n_pairs)
    pos = np.concatenate([[p0.s], traj.s])
    out = []
    n = 1
    while True:
        out.append((n, cover_gap(pos[: 2 * n + 1], table.L)))
        if n == n_pairs:
            return out
        n = min(2 * n, n_pairs)


# -- mixing -----------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Union of disjoint rectangles ``[s_lo, s_hi) x [theta_lo, theta_hi)``."""

    rects: tuple[tuple[float, float, float, float], ...]

    def indicator(self, s: np.ndarray, theta: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(s), dtype=bool)
        for s_lo, s_hi, t_lo, t_hi in self.rects:
            out |= (s >= s_lo) & (s < s_hi) & (theta >= t_lo) & (theta < t_hi)
        return out

    def liouville_measure(self, L: float) -> float:
        return sum((s_hi - s_lo) / L * liouville_mass(t_lo, t_hi) for s_lo, s_hi, t_lo, t_hi in self.rects)


def quarter_region(table: CircleTable) -> Region:
    """``[0, L/2) x (0, pi/2)``."""
    return Region(((0.0, table.L / 2, 0.0, math.pi / 2),))


def lattice_region(table: CircleTable, params: FeresParams, theta0: float, eps: float = 0.01) -> Region:
    """Full circle times the ``eps``-neighbourhood of the finite orbit set of ``theta0``.

    For rational ``alpha/pi`` and ``eps`` below the distance from the states
    to the probability breakpoints this set is invariant.
    """
    states = chain.enumerate_states(params, theta0)
    if states.truncated:
        raise ValueError("orbit set is not finite")
    rects = tuple((0.0, table.L, max(t - eps, 0.0), min(t + eps, math.pi)) for t in states.angles)
    return Region(rects)


def _mixing_block(args):
    table, params, f, g, lags, seed, block, m = args
    rng = billiard.block_rng(seed, block)
    s, theta = billiard.sample_liouville(rng, table, m)
    f0 = f.indicator(s, theta)
    wanted = set(int(x) for x in lags)
    tallies = {}
    k = 0
    while True:
        if k in wanted:
            gk = g.indicator(s, theta)
            tallies[k] = (int(f0.sum()), int(gk.sum()), int((f0 & gk).sum()))
        if k >= max(wanted):
            break
        s, theta, _ = billiard.ensemble_step(table, params, s, theta, rng.random(m))
        k += 1
    return tallies


def mixing_correlation(table: CircleTable, params: FeresParams, f_region: Region, g_region: Region,
                       lags: Sequence[int], M: int, seed: int, workers: int = 1) -> CorrelationTrace:
    """Estimate ``|E f(X_0) g(X_n) - E f E g|`` with ``X_0 ~ lambda x mu``.

    Only the counts of ``f``, ``g`` and ``f g`` are kept per block, so blocks
    merge by addition.  The standard error is that of the sample mean of
    ``(f - avg f)(g - avg g)``.
    """
    if M < 100_000:
        raise ValueError("ensemble must have at least 10^5 members")
    lags = [int(x) for x in lags]
    if not lags or min(lags) < 0:
        raise ValueError("lags must be non-negative")
    jobs = [(table, params, f_region, g_region, lags, seed, j, m)
            for j, m in enumerate(_block_sizes(M))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_mixing_block, jobs))
    else:
        parts = [_mixing_block(job) for job in jobs]

    est, err = [], []
    for lag in lags:
        nf, ng, nfg = (sum(p[lag][i] for p in parts) for i in range(3))
        a, b = nf / M, ng / M
        # (f - a)(g - b) takes four values; weights are the joint counts
        vals = np.array([(1 - a) * (1 - b), -(1 - a) * b, -a * (1 - b), a * b])
        counts = np.array([nfg, nf - nfg, ng - nfg, M - nf - ng + nfg], dtype=float)
        mean = float(vals @ counts) / M
        var = float((vals - mean) ** 2 @ counts) / M
        est.append(abs(mean))
        err.append(math.sqrt(var / M))
    return CorrelationTrace(np.array(lags), np.array(est), np.array(err), int(M))


def _block_sizes(M: int) -> list[int]:
    full, rest = divmod(M, billiard.BLOCK_SIZE)
    return [billiard.BLOCK_SIZE] * full + ([rest] if rest else [])


# -- pseudo-integrability ---------------------------------------------------------


def _pi_over_n(params: FeresParams) -> bool:
    if params.rational_tag is not None:
        return params.rational_tag[0] == 1
    k = round(math.pi / params.alpha)
    return abs(params.alpha - math.pi / k) < 1e-15 * math.pi


def motion_constant_check(params: FeresParams, traj: TrajectoryRecord, tol: float = 1e-9) -> bool:
    """True iff the fold of the angle into ``[0, alpha]`` stays constant along ``traj``.

    Raises
    ------
    UnsupportedAlphaForm
        unless ``alpha = pi/n``; for other ``alpha`` the branch ``T2`` need
        not preserve the fold.
    """
    if not _pi_over_n(params):
        raise UnsupportedAlphaForm(f"alpha={params.alpha} is not of the form pi/n")
    ref = chain.class_representative(params, traj.initial.theta)
    period = 2.0 * params.alpha
    r = np.fmod(traj.theta, period)
    folds = np.minimum(r, period - r)
    return bool(np.all(np.abs(folds - ref) < tol))
