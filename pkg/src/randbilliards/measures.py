"""Measures on angles and phase space, and their evolution under the random map.

Angle measures are stored as :class:`AngleHistogram` masses on ``N``
equal-width cells of ``(0, pi)``.  Inside a cell the measure is taken to
have constant density with respect to ``mu = sin(theta) dtheta / 2``, which
makes the histogram of ``mu`` itself an exact fixed point of the discrete
pushforward :func:`evolve_kernel` (up to quadrature rounding).
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.sparse as sp

from . import billiard, chain, feres
from .errors import BinMismatch, InvalidInterval, NegativeDensity, TruncatedStateSpace
from .feres import FeresParams
from .geometry import CircleTable

__all__ = [
    "AngleHistogram",
    "PhaseHistogram",
    "PhaseKnudsenResult",
    "liouville_mass",
    "liouville_histogram",
    "uniform_histogram",
    "histogram_from_density",
    "atomic_histogram",
    "transfer_matrix",
    "evolve_kernel",
    "tv_distance",
    "knudsen_run",
    "pushforward_mass",
    "chain_evolution",
    "phase_histogram",
    "liouville_phase_histogram",
    "phase_knudsen",
]

# 3-point Gauss-Legendre on [-1, 1]
_GL_X = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GL_W = np.array([5.0, 8.0, 5.0]) / 9.0


def liouville_mass(a: float, b: float) -> float:
    """``mu([a, b]) = (cos a - cos b) / 2``."""
    if not 0.0 <= a <= b <= math.pi:
        raise InvalidInterval(f"need 0 <= a <= b <= pi, got [{a}, {b}]")
    # product form keeps small cells accurate
    return math.sin(0.5 * (a + b)) * math.sin(0.5 * (b - a))


def _cell_mu(edges: np.ndarray) -> np.ndarray:
    a, b = edges[:-1], edges[1:]
    return np.sin(0.5 * (a + b)) * np.sin(0.5 * (b - a))


@dataclass(frozen=True, eq=False)
class AngleHistogram:
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or len(m) < 2:
            raise ValueError("need a 1-d array of at least two masses")
        if np.any(m < 0.0) or abs(m.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses must be non-negative and sum to one (sum {m.sum()!r})")
        object.__setattr__(self, "masses", m)

    @property
    def n_bins(self) -> int:
        return len(self.masses)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.n_bins + 1)


def liouville_histogram(n_bins: int) -> AngleHistogram:
    m = _cell_mu(np.linspace(0.0, math.pi, n_bins + 1))
    return AngleHistogram(m / m.sum())


def uniform_histogram(n_bins: int) -> AngleHistogram:
    """Lebesgue-uniform angles: every cell carries ``1/N``."""
    return AngleHistogram(np.full(n_bins, 1.0 / n_bins))


def histogram_from_density(g: Callable[[np.ndarray], np.ndarray], n_bins: int) -> AngleHistogram:
    """Histogram of ``g mu`` using 3-point Gauss-Legendre per cell, renormalised.

    ``g`` is evaluated on arrays of nodes.
    """
    if n_bins < 2:
        raise ValueError("need at least two bins")
    edges = np.linspace(0.0, math.pi, n_bins + 1)
    half = 0.5 * (edges[1] - edges[0])
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = mid[:, None] + half * _GL_X[None, :]
    gv = np.asarray(g(nodes), dtype=float) * np.ones_like(nodes)
    if np.any(gv < 0.0):
        raise NegativeDensity("density takes negative values")
    m = half * (gv * 0.5 * np.sin(nodes)) @ _GL_W
    total = m.sum()
    if not total > 0.0:
        raise ValueError("density has zero mass")
    return AngleHistogram(m / total)


def atomic_histogram(angles, weights, n_bins: int) -> AngleHistogram:
    """Bin a finitely supported measure."""
    idx = np.clip((np.asarray(angles) * n_bins / math.pi).astype(int), 0, n_bins - 1)
    m = np.bincount(idx, weights=np.asarray(weights, dtype=float), minlength=n_bins)
    return AngleHistogram(m / m.sum())


def _inverse_branch(i: int, a: float, phi: np.ndarray) -> np.ndarray:
    if i == 1:
        return phi - 2 * a
    if i == 2:
        return 2 * math.pi - 4 * a - phi
    if i == 3:
        return phi + 2 * a
    return 4 * a - phi


@functools.lru_cache(maxsize=16)
def transfer_matrix(params: FeresParams, n_bins: int) -> sp.csr_matrix:
    """Column-stochastic matrix ``Q`` with ``masses_next = Q @ masses``.

    For each branch the cells are split at every probability breakpoint and
    at the preimages of every target edge, so each piece lies in one source
    cell, one smooth piece of ``p_i`` and one target cell.  The piece weight
    is the 3-point Gauss-Legendre integral of ``p_i sin / 2`` divided by the
    ``mu``-mass of the source cell.
    """
    edges = np.linspace(0.0, math.pi, n_bins + 1)
    a = params.alpha
    rows, cols, vals = [], [], []
    for i in (1, 2, 3, 4):
        pts = np.concatenate([edges, params.breakpoints, _inverse_branch(i, a, edges)])
        pts = np.unique(pts[(pts >= 0.0) & (pts <= math.pi)])
        lo, hi = pts[:-1], pts[1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (lo + hi)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        p = feres.branch_probabilities(params, nodes)[..., i - 1]
        w = half * ((p * 0.5 * np.sin(nodes)) @ _GL_W)
        image = feres.apply_branches(params, np.full(mid.shape, i), mid)
        keep = (w > 0.0) & (image > 0.0) & (image < math.pi)
        src = np.clip(np.searchsorted(edges, mid[keep], side="right") - 1, 0, n_bins - 1)
        tgt = np.clip(np.searchsorted(edges, image[keep], side="right") - 1, 0, n_bins - 1)
        rows.append(tgt)
        cols.append(src)
        vals.append(w[keep])
    W = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_bins, n_bins),
    )
    colsum = np.asarray(W.sum(axis=0)).ravel()
    return (W @ sp.diags(1.0 / colsum)).tocsr()


def evolve_kernel(params: FeresParams, h: AngleHistogram) -> AngleHistogram:
    """One step ``nu -> int K(theta, .) dnu(theta)`` on the histogram grid."""
    Q = transfer_matrix(params, h.n_bins)
    return AngleHistogram(Q @ h.masses)


def tv_distance(h1, h2) -> float:
    """Total variation ``sum |m1 - m2| / 2`` between histograms on the same grid."""
    m1 = np.asarray(getattr(h1, "masses", h1))
    m2 = np.asarray(getattr(h2, "masses", h2))
    if m1.shape != m2.shape:
        raise BinMismatch(f"grids differ: {m1.shape} vs {m2.shape}")
    return 0.5 * float(np.abs(m1 - m2).sum())


def knudsen_run(params: FeresParams, h0: AngleHistogram, n: int) -> np.ndarray:
    """Distances ``TV(nu_k, mu)`` for ``k = 0..n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    Q = transfer_matrix(params, h0.n_bins)
    ref = liouville_histogram(h0.n_bins).masses
    m = h0.masses
    out = np.empty(n + 1)
    out[0] = tv_distance(m, ref)
    for k in range(1, n + 1):
        m = Q @ m
        out[k] = tv_distance(m, ref)
    return out


def pushforward_mass(params: FeresParams, interval: tuple[float, float]) -> float:
    """``int K(theta, A) dmu(theta)`` by adaptive quadrature.

    The preimage of ``A`` under each branch is cut at every probability
    breakpoint and each smooth piece is integrated separately.
    """
    a, b = interval
    if not 0.0 <= a < b <= math.pi:
        raise InvalidInterval(f"need 0 <= a < b <= pi, got [{a}, {b})")
    cuts = np.array((0.0,) + params.breakpoints + (math.pi,))
    total = 0.0
    for i in (1, 2, 3, 4):
        lo, hi = sorted(_inverse_branch(i, params.alpha, np.array([a, b])))
        lo, hi = max(lo, 0.0), min(hi, math.pi)
        if lo >= hi:
            continue
        pts = np.concatenate([[lo], cuts[(cuts > lo) & (cuts < hi)], [hi]])
        for x0, x1 in zip(pts[:-1], pts[1:]):
            val, _ = scipy.integrate.quad(
                lambda t: feres.branch_distribution(params, t)[i - 1] * 0.5 * math.sin(t),
                x0, x1, epsabs=1e-14, epsrel=1e-13, limit=200,
            )
            total += val
    return total


def chain_evolution(params: FeresParams, theta0: float, d0=None, n: int = 1,
                    max_states: int = 10_000) -> np.ndarray:
    """``d0 P^n`` on the orbit set of ``theta0`` by repeated multiplication.

    ``d0 = None`` is the point mass at ``theta0``.  States are ordered as in
    :func:`randbilliards.chain.enumerate_states`.
    """
    states = chain.enumerate_states(params, theta0, max_states)
    if states.truncated:
        raise TruncatedStateSpace("orbit set is not finite within max_states")
    P = chain.build_matrix(states, params)
    if d0 is None:
        d = np.zeros(len(states))
        d[states.index_of(theta0)] = 1.0
    else:
        d = np.asarray(d0, dtype=float).copy()
    PT = P.T.tocsr()
    for _ in range(n):
        d = PT @ d
    return d


# -- phase space ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseHistogram:
    """Masses on an ``N_s x N_theta`` grid over ``[0, L) x (0, pi)``."""

    masses: np.ndarray
    L: float

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 2 or np.any(m < 0.0) or abs(m.sum() - 1.0) > 1e-12:
            raise ValueError("need a 2-d non-negative array summing to one")
        object.__setattr__(self, "masses", m)

    @property
    def s_marginal(self) -> np.ndarray:
        return self.masses.sum(axis=1)


def _phase_counts(s, theta, L, grid):
    ns, nt = grid
    si = np.minimum((s * (ns / L)).astype(np.int64), ns - 1)
    ti = np.minimum((theta * (nt / math.pi)).astype(np.int64), nt - 1)
    return np.bincount(si * nt + ti, minlength=ns * nt).reshape(ns, nt)


def phase_histogram(s, theta, L: float, grid=(50, 50)) -> PhaseHistogram:
    c = _phase_counts(np.asarray(s), np.asarray(theta), L, grid)
    return PhaseHistogram(c / c.sum(), L)


def liouville_phase_histogram(L: float, grid=(50, 50)) -> PhaseHistogram:
    ns, nt = grid
    mu = liouville_histogram(nt).masses
    return PhaseHistogram(np.outer(np.full(ns, 1.0 / ns), mu), L)


@dataclass(frozen=True)
class PhaseKnudsenResult:
    """``tv[k]`` is the distance to ``lambda x mu`` after ``k`` steps.

    ``s_uniformity_z[k]`` standardises Pearson's chi-square of the
    ``s``-marginal against the uniform law, ``(X^2 - df) / sqrt(2 df)``.
    """

    tv: np.ndarray
    s_uniformity_z: np.ndarray
    ensemble: int
    grid: tuple[int, int]


def _phase_block(args):
    table, params, seed, block, m, n, grid, density, density_max = args
    rng = billiard.block_rng(seed, block)
    s, theta = billiard.sample_liouville(rng, table, m, density, density_max)
    counts = np.empty((n + 1,) + tuple(grid), dtype=np.int64)
    counts[0] = _phase_counts(s, theta, table.L, grid)
    for k in range(1, n + 1):
        s, theta, _ = billiard.ensemble_step(table, params, s, theta, rng.random(m))
        counts[k] = _phase_counts(s, theta, table.L, grid)
    return counts


def _block_sizes(M: int) -> list[int]:
    full, rest = divmod(M, billiard.BLOCK_SIZE)
    return [billiard.BLOCK_SIZE] * full + ([rest] if rest else [])


def phase_knudsen(table: CircleTable, params: FeresParams, M: int, n: int, seed: int,
                  density=None, density_max: float | None = None, grid=(50, 50),
                  workers: int = 1) -> PhaseKnudsenResult:
    """Monte Carlo evolution of ``lambda x (g mu)`` under the random billiard.

    ``density`` is ``g`` (``None`` for ``g = 1``); see
    :func:`randbilliards.billiard.sample_liouville`.  The outcome depends on
    ``seed`` only, not on ``workers``.
    """
    if M < 10_000:
        raise ValueError("ensemble must have at least 10^4 members")
    grid = tuple(int(g) for g in grid)
    jobs = [(table, params, seed, j, m, n, grid, density, density_max)
            for j, m in enumerate(_block_sizes(M))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_phase_block, jobs))
    else:
        parts = [_phase_block(job) for job in jobs]
    counts = sum(parts)

    ref = liouville_phase_histogram(table.L, grid).masses
    tv = 0.5 * np.abs(counts / M - ref[None]).sum(axis=(1, 2))
    s_counts = counts.sum(axis=2)
    ns = grid[0]
    expected = M / ns
    chi2 = ((s_counts - expected) ** 2 / expected).sum(axis=1)
    df = ns - 1
    z = (chi2 - df) / math.sqrt(2 * df)
    return PhaseKnudsenResult(tv, z, M, grid)
