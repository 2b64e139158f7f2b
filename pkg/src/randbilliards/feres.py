"""The four-branch random map on reflection angles.

With a fixed wedge parameter ``0 < alpha < pi/6`` the outgoing angle is

    T1(t) = t + 2a,   T2(t) = -t + 2pi - 4a,   T3(t) = t - 2a,   T4(t) = -t + 4a

chosen with angle-dependent probabilities ``p1..p4``, piecewise on the
breakpoints ``a, 2a, 3a, pi-3a, pi-2a, pi-a``.  The probabilities are
built from ``u_a(t) = (1 + tan(a) cot(t)) / 2``; with this normalisation the
four branches sum to one and ``sin(t) dt / 2`` is invariant.

Branch indices are the integers 1..4 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyInterval, InvalidAlpha, NormalizationFailure, ThetaOutOfRange

__all__ = [
    "FeresParams",
    "BranchDistribution",
    "EPS_P",
    "u_alpha",
    "apply_branch",
    "branch_distribution",
    "branch_probabilities",
    "apply_branches",
    "sample_branch",
    "sample_branches",
    "step",
    "kernel_mass",
    "word_probability",
    "is_admissible",
    "is_almost_admissible",
    "apply_word",
]

# a branch with probability at or below this is treated as unavailable
EPS_P = 1e-12

BRANCH_SLOPE = {1: 1, 2: -1, 3: 1, 4: -1}


@dataclass(frozen=True)
class FeresParams:
    """Wedge parameter ``alpha`` and, optionally, ``alpha = m*pi/n`` exactly.

    Use :meth:`rational` to build a tagged instance; the tag enables exact
    state bookkeeping in :mod:`randbilliards.chain`.
    """

    alpha: float
    rational_tag: tuple[int, int] | None = None
    _consts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = float(self.alpha)
        object.__setattr__(self, "alpha", a)
        if not 0.0 < a < math.pi / 6:
            raise InvalidAlpha(f"alpha must lie in (0, pi/6), got {a}")
        if self.rational_tag is not None:
            m, n = (int(v) for v in self.rational_tag)
            if m <= 0 or n <= 0 or math.gcd(m, n) != 1:
                raise InvalidAlpha(f"rational tag must be coprime positive integers, got {m}/{n}")
            if abs(a - m * math.pi / n) >= 1e-15 * math.pi:
                raise InvalidAlpha(f"alpha={a} does not equal {m}*pi/{n}")
            object.__setattr__(self, "rational_tag", (m, n))
        object.__setattr__(self, "_consts", _table_constants(a))

    @classmethod
    def rational(cls, m: int, n: int) -> FeresParams:
        """``alpha = m*pi/n``; the fraction is reduced first."""
        f = Fraction(m, n)
        return cls(f.numerator * math.pi / f.denominator, (f.numerator, f.denominator))

    @classmethod
    def parse(cls, text: str | float) -> FeresParams:
        """Accept ``"m/n"`` (a fraction of pi) or a decimal number of radians.

        A decimal within ``1e-15 pi`` of ``m*pi/n`` with ``n <= 1000`` is
        tagged as rational.
        """
        if isinstance(text, str) and "/" in text:
            m, n = text.split("/")
            return cls.rational(int(m), int(n))
        a = float(text)
        f = Fraction(a / math.pi).limit_denominator(1000)
        if f.numerator > 0 and abs(a - f.numerator * math.pi / f.denominator) < 1e-15 * math.pi:
            return cls(a, (f.numerator, f.denominator))
        return cls(a)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        a = self.alpha
        return (a, 2 * a, 3 * a, math.pi - 3 * a, math.pi - 2 * a, math.pi - a)

    def as_dict(self) -> dict:
        d = {"alpha": self.alpha}
        if self.rational_tag is not None:
            d["alpha_over_pi"] = "%d/%d" % self.rational_tag
        return d


class BranchDistribution(NamedTuple):
    p1: float
    p2: float
    p3: float
    p4: float

    @property
    def cumulative(self) -> tuple[float, float, float, float]:
        c1 = self.p1
        c2 = c1 + self.p2
        c3 = c2 + self.p3
        return (c1, c2, c3, c3 + self.p4)


def _check_theta(theta):
    if not 0.0 < theta < math.pi:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta}")


def _u(a: float, theta: float) -> float:
    # cot(pi/2) must be exactly 0
    cot = math.cos(theta) / math.sin(theta)
    return 0.5 * (1.0 + math.tan(a) * cot)


def u_alpha(params: FeresParams, theta: float) -> float:
    """``(1 + tan(alpha) cot(theta)) / 2``."""
    _check_theta(theta)
    return _u(params.alpha, theta)


def apply_branch(i: int, params: FeresParams, theta: float) -> float:
    """Raw affine image of ``theta`` under branch ``i``; no range check."""
    a = params.alpha
    if i == 1:
        return theta + 2 * a
    if i == 2:
        return -theta + 2 * math.pi - 4 * a
    if i == 3:
        return theta - 2 * a
    if i == 4:
        return -theta + 4 * a
    raise ValueError(f"branch index must be 1..4, got {i}")


def _table_constants(a: float) -> tuple[float, ...]:
    pi = math.pi
    return (a, 2 * a, 3 * a, pi - 3 * a, pi - 2 * a, pi - a,
            math.tan(a), math.tan(2 * a), 2.0 * math.cos(2 * a))


def _raw_probs(k: tuple[float, ...], theta: float) -> tuple[float, float, float, float]:
    """Probability table on one of the seven pieces; ``k`` from :func:`_table_constants`."""
    b1, b2, b3, b4, b5, b6, ta, t2a, c2 = k
    if theta < b1:
        return (1.0, 0.0, 0.0, 0.0)
    if theta >= b6:
        return (0.0, 0.0, 1.0, 0.0)
    # cot(pi/2) must be exactly 0
    cot = math.cos(theta) / math.sin(theta)
    # rounding at theta = alpha or pi - alpha can push these just outside [0, 1]
    up = min(max(0.5 * (1.0 + ta * cot), 0.0), 1.0)
    um = min(max(0.5 * (1.0 - ta * cot), 0.0), 1.0)
    if theta < b2:
        return (up, 0.0, 0.0, um)
    if theta < b3:
        w = max(c2 * 0.5 * (1.0 - t2a * cot), 0.0)
        return (up, 0.0, w, max(um - w, 0.0))
    if theta < b4:
        return (up, 0.0, um, 0.0)
    if theta < b5:
        w = max(c2 * 0.5 * (1.0 + t2a * cot), 0.0)
        return (w, max(up - w, 0.0), um, 0.0)
    return (0.0, up, um, 0.0)


def branch_distribution(params: FeresParams, theta: float) -> BranchDistribution:
    """Branch probabilities at ``theta``.

    Every piece is a half-open interval closed on the left, so an angle
    sitting exactly on a breakpoint takes the case to its right.

    Raises
    ------
    NormalizationFailure
        if the probabilities do not sum to one within ``1e-12``.
    """
    _check_theta(theta)
    dist = BranchDistribution(*_raw_probs(params._consts, theta))
    total = math.fsum(dist)
    if abs(total - 1.0) > 1e-12 or min(dist) < 0.0 or max(dist) > 1.0:
        raise NormalizationFailure(f"branch probabilities {dist} at theta={theta} (sum {total})")
    return dist


def branch_probabilities(params: FeresParams, theta) -> np.ndarray:
    """Vectorised :func:`branch_distribution`: shape ``theta.shape + (4,)``.

    No validation; callers keep ``theta`` inside ``(0, pi)``.
    """
    t = np.asarray(theta, dtype=float)
    a = params.alpha
    pi = math.pi
    c2 = 2.0 * math.cos(2 * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = np.cos(t) / np.sin(t)
    ua_p = 0.5 * (1.0 + math.tan(a) * cot)
    ua_m = 0.5 * (1.0 - math.tan(a) * cot)
    u2_p = c2 * 0.5 * (1.0 + math.tan(2 * a) * cot)
    u2_m = c2 * 0.5 * (1.0 - math.tan(2 * a) * cot)

    out = np.zeros(t.shape + (4,))
    out[..., 0] = np.select(
        [t < a, t < pi - 3 * a, t < pi - 2 * a], [1.0, ua_p, u2_p], 0.0
    )
    out[..., 1] = np.select(
        [t < pi - 3 * a, t < pi - 2 * a, t < pi - a], [0.0, ua_p - u2_p, ua_p], 0.0
    )
    out[..., 2] = np.select(
        [t < 2 * a, t < 3 * a, t < pi - a], [0.0, u2_m, ua_m], 1.0
    )
    out[..., 3] = np.select(
        [t < a, t < 2 * a, t < 3 * a], [0.0, ua_m, ua_m - u2_m], 0.0
    )
    return np.clip(out, 0.0, 1.0)


def apply_branches(params: FeresParams, branch, theta) -> np.ndarray:
    """Vectorised :func:`apply_branch` for integer arrays of branch indices."""
    a = params.alpha
    t = np.asarray(theta, dtype=float)
    b = np.asarray(branch)
    slope = np.where((b == 1) | (b == 3), 1.0, -1.0)
    shift = np.choose(b - 1, [2 * a, 2 * math.pi - 4 * a, -2 * a, 4 * a])
    return slope * t + shift


def sample_branch(dist: Sequence[float], u: float) -> int:
    """Inverse-CDF draw: the smallest ``i`` with ``u < p1 + ... + pi``.

    If rounding leaves the total just below ``u``, the last branch with
    positive probability is returned.
    """
    acc = 0.0
    last = 1
    for i, p in enumerate(dist, start=1):
        if p > 0.0:
            last = i
        acc += p
        if u < acc:
            return i
    return last


def sample_branches(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorised :func:`sample_branch` over rows of ``probs`` (shape ``(M, 4)``)."""
    cum = np.cumsum(probs, axis=-1)
    k = (u[..., None] >= cum).sum(axis=-1)
    # rounding overflow: fall back to the last branch carrying mass
    over = k >= 4
    if np.any(over):
        last = 3 - np.argmax(probs[over][:, ::-1] > 0.0, axis=-1)
        k[over] = last
    return k + 1


def step(params: FeresParams, theta: float, u: float) -> tuple[float, int]:
    """One draw of the random map using the uniform ``u``; returns ``(angle, branch)``."""
    i = sample_branch(branch_distribution(params, theta), u)
    return apply_branch(i, params, theta), i


def kernel_mass(params: FeresParams, theta: float, interval: tuple[float, float]) -> float:
    """Transition kernel ``K(theta, [a, b)) = sum_i p_i(theta) 1[T_i(theta) in [a, b)]``."""
    a, b = interval
    if not a < b:
        raise EmptyInterval(f"empty interval [{a}, {b})")
    dist = branch_distribution(params, theta)
    total = 0.0
    for i, p in enumerate(dist, start=1):
        if p > 0.0 and a <= apply_branch(i, params, theta) < b:
            total += p
    return total


def word_probability(params: FeresParams, theta: float, word: Sequence[int]) -> tuple[float, list[float]]:
    """Probability of following ``word`` from ``theta``, and the angle path.

    The path holds the raw images after each symbol.  Once an image leaves
    ``(0, pi)`` the probability is zero and later factors are not
    evaluated, but the remaining images are still reported.
    """
    _check_theta(theta)
    if len(word) == 0:
        raise ValueError("word must be non-empty")
    prob = 1.0
    path = []
    t = theta
    alive = True
    for x in word:
        if alive:
            prob *= branch_distribution(params, t)[x - 1]
        t = apply_branch(x, params, t)
        path.append(t)
        if not 0.0 < t < math.pi:
            alive = False
            prob = 0.0
    return prob, path


def is_admissible(params: FeresParams, theta: float, word: Sequence[int]) -> bool:
    """Every factor of the word probability exceeds ``EPS_P``."""
    t = theta
    for x in word:
        if not 0.0 < t < math.pi or branch_distribution(params, t)[x - 1] <= EPS_P:
            return False
        t = apply_branch(x, params, t)
    return True


def is_almost_admissible(params: FeresParams, theta: float, word: Sequence[int]) -> bool:
    """Every intermediate image stays inside ``[0, pi]``; probabilities are ignored."""
    t = theta
    for x in word:
        t = apply_branch(x, params, t)
        if not 0.0 <= t <= math.pi:
            return False
    return True


def apply_word(params: FeresParams, theta: float, word: Sequence[int]) -> float:
    """Compose the branches of ``word`` (first symbol applied first)."""
    for x in word:
        theta = apply_branch(x, params, theta)
    return theta
