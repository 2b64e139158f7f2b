"""Circular billiard maps, seeded trajectories and the derivative cocycle.

The random billiard first redraws the angle with the random map and then
flies along the chord at the *new* angle::

    (s, theta) -> (s + gamma(T_i theta) * h  mod L,  T_i theta)

Random numbers
--------------
Trajectories use ``numpy.random.Generator(PCG64(seed))``.  :func:`simulate`
draws all ``n`` uniforms with one ``rng.random(n)`` call and step ``k``
consumes uniform ``k``.  Ensembles are cut into fixed blocks of
:data:`BLOCK_SIZE` members; block ``j`` uses ``PCG64(SeedSequence([seed, j]))``
and draws one array of uniforms per step, so results do not depend on how
blocks are spread over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import feres, geometry
from .errors import NotAdmissible, ThetaOutOfRange
from .feres import FeresParams
from .geometry import CircleTable

__all__ = [
    "PhasePoint",
    "TrajectoryRecord",
    "SkewPoint",
    "Cocycle",
    "BLOCK_SIZE",
    "make_rng",
    "block_rng",
    "deterministic_step",
    "random_step",
    "simulate",
    "simulate_word",
    "skew_step",
    "cocycle_step",
    "derivative_matrix",
    "ensemble_step",
    "sample_liouville",
]

BLOCK_SIZE = 1 << 17


@dataclass(frozen=True)
class PhasePoint:
    s: float
    theta: float

    def validate(self, table: CircleTable) -> PhasePoint:
        if not 0.0 <= self.s < table.L:
            raise ValueError(f"position {self.s} outside [0, {table.L})")
        if not 0.0 < self.theta < math.pi:
            raise ThetaOutOfRange(f"angle must lie in (0, pi), got {self.theta}")
        return self


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Visited states after each step; ``branch`` is 0 for deterministic steps.

    ``seed`` is ``None`` for trajectories prescribed by a word.
    """

    table: CircleTable
    params: FeresParams | None
    seed: int | None
    initial: PhasePoint
    s: np.ndarray
    theta: np.ndarray
    branch: np.ndarray

    def __len__(self) -> int:
        return len(self.s)

    @property
    def steps(self) -> list[tuple[float, float, int]]:
        return list(zip(self.s.tolist(), self.theta.tolist(), self.branch.tolist()))

    def metadata(self) -> dict:
        meta = {"table": self.table.as_dict(), "seed": self.seed,
                "initial": {"s": self.initial.s, "theta": self.initial.theta},
                "n_steps": len(self)}
        if self.params is not None:
            meta["params"] = self.params.as_dict()
        return meta

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (self.metadata() == other.metadata()
                and np.array_equal(self.s, other.s)
                and np.array_equal(self.theta, other.theta)
                and np.array_equal(self.branch, other.branch))


@dataclass(frozen=True)
class SkewPoint:
    x: float
    s: float
    theta: float


@dataclass(frozen=True)
class Cocycle:
    """Derivative of ``n`` random steps: ``[[1, A h], [0, B]]``."""

    A: float = 0.0
    B: int = 1
    n: int = 0


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_check_seed(seed)))


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([_check_seed(seed), block])))


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 1 << 64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def deterministic_step(table: CircleTable, p: PhasePoint) -> PhasePoint:
    """Classical circular billiard: the angle is a constant of motion."""
    return PhasePoint(geometry.advance(p.s, geometry.flight_arc(table, p.theta), table.L), p.theta)


def random_step(table: CircleTable, params: FeresParams, p: PhasePoint, u: float) -> tuple[PhasePoint, int]:
    """Redraw the angle with uniform ``u``, then fly at the new angle."""
    theta, i = feres.step(params, p.theta, u)
    s = geometry.advance(p.s, geometry.flight_arc(table, theta), table.L)
    return PhasePoint(s, theta), i


def simulate(table: CircleTable, params: FeresParams, p0: PhasePoint, n: int, seed: int) -> TrajectoryRecord:
    """``n`` random steps from ``p0``, reproducible from ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    p0.validate(table)
    uniforms = make_rng(seed).random(n)
    s, theta, branch = _walk(table, params, p0.s, p0.theta, uniforms.tolist())
    return TrajectoryRecord(table, params, int(seed), p0, s, theta, branch)


def _walk(table, params, pos, t, uniforms):
    # same arithmetic as repeated random_step, without per-step validation
    n = len(uniforms)
    s = np.empty(n)
    theta = np.empty(n)
    branch = np.empty(n, dtype=np.int8)
    consts = params._consts
    h, L = table.h, table.L
    for k, u in enumerate(uniforms):
        i = feres.sample_branch(feres._raw_probs(consts, t), u)
        t = feres.apply_branch(i, params, t)
        pos = geometry.advance(pos, geometry._gamma(table, t) * h, L)
        s[k] = pos
        theta[k] = t
        branch[k] = i
    return s, theta, branch


def simulate_word(table: CircleTable, params: FeresParams, p0: PhasePoint, word: Sequence[int]) -> TrajectoryRecord:
    """Follow the prescribed branches of ``word`` instead of sampling them.

    Zero-probability steps are allowed as long as every image stays in
    ``[0, pi]``.

    Raises
    ------
    NotAdmissible
        if an intermediate angle leaves ``[0, pi]``.
    """
    p0.validate(table)
    word = [int(x) for x in word]
    if not word:
        raise ValueError("word must be non-empty")
    if not feres.is_almost_admissible(params, p0.theta, word):
        raise NotAdmissible(f"word leaves [0, pi] from theta={p0.theta}")
    n = len(word)
    s = np.empty(n)
    theta = np.empty(n)
    pos, t = p0.s, p0.theta
    h, L = table.h, table.L
    for k, x in enumerate(word):
        t = feres.apply_branch(x, params, t)
        pos = geometry.advance(pos, geometry._gamma(table, t) * h, L)
        s[k], theta[k] = pos, t
    return TrajectoryRecord(table, params, None, p0, s, theta, np.array(word, dtype=np.int8))


def skew_step(table: CircleTable, params: FeresParams, sk: SkewPoint) -> SkewPoint:
    """Deterministic skew product carrying the randomness in the fibre coordinate ``x``.

    Branch ``k`` is selected when ``x`` falls in the ``k``-th cumulative
    probability cell ``[c_{k-1}, c_k)``, and ``x`` is rescaled affinely onto
    ``[0, 1)``.
    """
    dist = feres.branch_distribution(params, sk.theta)
    k = feres.sample_branch(dist, sk.x)
    lo = sum(dist[: k - 1])
    x = (sk.x - lo) / dist[k - 1]
    x = min(max(x, 0.0), math.nextafter(1.0, 0.0))
    theta = feres.apply_branch(k, params, sk.theta)
    s = geometry.advance(sk.s, geometry.flight_arc(table, theta), table.L)
    return SkewPoint(x, s, theta)


def cocycle_step(c: Cocycle, table: CircleTable, params: FeresParams, theta_new: float, branch: int) -> Cocycle:
    """Accumulate one step of the derivative.

    ``B`` picks up the slope of the branch; ``A`` adds ``gamma'`` at the new
    angle times the new ``B``.
    """
    B = c.B * feres.BRANCH_SLOPE[branch]
    A = c.A + geometry.central_angle_derivative(table, theta_new) * B
    return Cocycle(A, B, c.n + 1)


def derivative_matrix(c: Cocycle, table: CircleTable) -> np.ndarray:
    return np.array([[1.0, c.A * table.h], [0.0, float(c.B)]])


# -- vectorised ensembles ----------------------------------------------------


def ensemble_step(table: CircleTable, params: FeresParams, s: np.ndarray, theta: np.ndarray, u: np.ndarray):
    """One random step for arrays of states; returns ``(s, theta, branch)``."""
    probs = feres.branch_probabilities(params, theta)
    branch = feres.sample_branches(probs, u)
    theta = feres.apply_branches(params, branch, theta)
    s = geometry.advance(s, geometry._gamma(table, theta) * table.h, table.L)
    return s, theta, branch


def sample_liouville(rng: np.random.Generator, table: CircleTable, m: int,
                     density=None, density_max: float | None = None):
    """Draw ``m`` phase points from ``lambda x (g mu)``.

    ``s`` is uniform on ``[0, L)`` and ``theta`` has density ``g`` with
    respect to ``mu = sin(theta) dtheta / 2``; ``g = None`` means ``g = 1``.
    Non-trivial ``g`` is sampled by rejection and needs ``density_max``.
    The ``s`` coordinates are drawn first, then angles in batches.
    """
    s = rng.random(m) * table.L
    if density is None:
        return s, _clip_open(np.arccos(1.0 - 2.0 * rng.random(m)))
    if density_max is None or density_max <= 0.0:
        raise ValueError("rejection sampling needs a positive density_max")
    out = np.empty(m)
    filled = 0
    while filled < m:
        want = m - filled
        cand = np.arccos(1.0 - 2.0 * rng.random(want))
        keep = cand[rng.random(want) * density_max < density(cand)]
        take = min(len(keep), want)
        out[filled:filled + take] = keep[:take]
        filled += take
    return s, _clip_open(out)


def _clip_open(theta: np.ndarray) -> np.ndarray:
    # arccos returns exactly 0 for a zero uniform
    return np.clip(theta, np.nextafter(0.0, 1.0), np.nextafter(math.pi, 0.0))
