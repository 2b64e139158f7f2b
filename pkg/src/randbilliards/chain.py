"""Markov chain on the set of angles reachable from a seed angle.

The orbit set of ``theta0`` is explored breadth first through every branch
with probability above :data:`~randbilliards.feres.EPS_P`.  When
``alpha = m*pi/n`` is tagged, each state is additionally carried as the
exact pair ``(a, b)`` with value ``a*theta0 + b*pi/n`` (``a = +-1``), so
long explorations do not accumulate floating drift.
"""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import feres
from .errors import (
    ImageEscapesStateSpace,
    InvalidPath,
    NoConvergence,
    ReducibleChain,
    ThetaOutOfRange,
    TruncatedStateSpace,
)
from .feres import FeresParams

__all__ = [
    "EPS_S",
    "ChainStates",
    "enumerate_states",
    "build_matrix",
    "is_irreducible",
    "chain_period",
    "stationary",
    "cylinder_measure",
    "class_representative",
    "reduce_to_fundamental",
    "chain_summary",
]

# two angles closer than this are the same state
EPS_S = 1e-9


@dataclass(frozen=True)
class ChainStates:
    angles: np.ndarray
    origin: float
    truncated: bool

    def __len__(self) -> int:
        return len(self.angles)

    def index_of(self, theta: float) -> int | None:
        """Index of the state within ``EPS_S`` of ``theta``, or ``None``."""
        k = int(np.searchsorted(self.angles, theta))
        for j in (k - 1, k):
            if 0 <= j < len(self.angles) and abs(self.angles[j] - theta) < EPS_S:
                return j
        return None


class _SortedValues:
    """Sorted float list with tolerance lookup."""

    def __init__(self):
        self.values: list[float] = []
        self.ids: list[int] = []

    def find(self, x: float) -> int | None:
        k = bisect.bisect_left(self.values, x)
        for j in (k - 1, k):
            if 0 <= j < len(self.values) and abs(self.values[j] - x) < EPS_S:
                return self.ids[j]
        return None

    def add(self, x: float, ident: int) -> None:
        k = bisect.bisect_left(self.values, x)
        self.values.insert(k, x)
        self.ids.insert(k, ident)


def _exact_image(i: int, key: tuple[int, int], m: int, n: int) -> tuple[int, int]:
    a, b = key
    if i == 1:
        return a, b + 2 * m
    if i == 2:
        return -a, -b + 2 * n - 4 * m
    if i == 3:
        return a, b - 2 * m
    return -a, -b + 4 * m


def enumerate_states(params: FeresParams, theta0: float, max_states: int = 10_000) -> ChainStates:
    """Breadth-first closure of ``{theta0}`` under the positive-probability branches.

    ``truncated`` is set when a new state would exceed ``max_states``; for
    irrational ``alpha/pi`` the orbit set is infinite and this always
    happens.
    """
    if not 0.0 < theta0 < math.pi:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta0}")
    if max_states < 1:
        raise ValueError("max_states must be at least 1")
    tag = params.rational_tag
    unit = math.pi / tag[1] if tag else 0.0

    values = [theta0]
    seen = _SortedValues()
    seen.add(theta0, 0)
    keys = {(1, 0): 0} if tag else None
    queue = deque([(theta0, (1, 0))])
    truncated = False

    while queue and not truncated:
        theta, key = queue.popleft()
        dist = feres.branch_distribution(params, theta)
        for i, p in enumerate(dist, start=1):
            if p <= feres.EPS_P:
                continue
            if tag:
                new_key = _exact_image(i, key, *tag)
                if new_key in keys:
                    continue
                image = new_key[0] * theta0 + new_key[1] * unit
            else:
                new_key = None
                image = feres.apply_branch(i, params, theta)
            ident = seen.find(image)
            if ident is None:
                if len(values) >= max_states:
                    truncated = True
                    break
                ident = len(values)
                values.append(image)
                seen.add(image, ident)
                queue.append((image, new_key))
            if tag:
                keys[new_key] = ident

    return ChainStates(np.sort(np.array(values)), float(theta0), truncated)


def build_matrix(states: ChainStates, params: FeresParams) -> sp.csr_matrix:
    """Row-stochastic transition matrix over ``states`` (at most four entries per row).

    Raises
    ------
    TruncatedStateSpace
        if the state set is not closed.
    ImageEscapesStateSpace
        if a positive-probability image is not among the states.
    """
    if states.truncated:
        raise TruncatedStateSpace("cannot build a finite matrix on a truncated state set")
    n = len(states)
    rows, cols, vals = [], [], []
    for r, theta in enumerate(states.angles):
        dist = feres.branch_distribution(params, float(theta))
        for i, p in enumerate(dist, start=1):
            if p <= feres.EPS_P:
                continue
            image = feres.apply_branch(i, params, float(theta))
            c = states.index_of(image)
            if c is None:
                raise ImageEscapesStateSpace(
                    f"branch {i} maps state {theta} to {image}, which is not a state"
                )
            rows.append(r)
            cols.append(c)
            vals.append(p)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    P.sum_duplicates()
    sums = np.asarray(P.sum(axis=1)).ravel()
    if np.any(np.abs(sums - 1.0) > 1e-12):
        raise ImageEscapesStateSpace(f"row sums deviate from one by {np.abs(sums - 1).max():.3e}")
    return P


def _as_sparse(P) -> sp.csr_matrix:
    return sp.csr_matrix(P)


def is_irreducible(P) -> bool:
    """Strong connectivity of the graph of positive entries."""
    P = _as_sparse(P)
    P.eliminate_zeros()
    ncomp, _ = connected_components(P, directed=True, connection="strong")
    return ncomp == 1


def chain_period(P) -> int:
    """Period of an irreducible chain.

    BFS levels from state 0; the period is the gcd of ``level[u] + 1 - level[v]``
    over all edges ``u -> v``.
    """
    P = _as_sparse(P)
    P.eliminate_zeros()
    if not is_irreducible(P):
        raise ReducibleChain("period is defined for irreducible chains only")
    n = P.shape[0]
    level = np.full(n, -1)
    level[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in P.indices[P.indptr[u]:P.indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u in range(n):
        for v in P.indices[P.indptr[u]:P.indptr[u + 1]]:
            g = math.gcd(g, abs(int(level[u] + 1 - level[v])))
    return g


def stationary(P, tol: float = 1e-12, maxiter: int = 1_000_000) -> np.ndarray:
    """Stationary distribution ``pi P = pi`` of an irreducible chain.

    Chains with at most 1000 states are solved directly; larger ones use
    Cesaro-averaged power iteration, which also converges for periodic
    chains.
    """
    P = _as_sparse(P)
    if not is_irreducible(P):
        raise ReducibleChain("stationary distribution is unique only for irreducible chains")
    n = P.shape[0]
    if n <= 1000:
        A = P.T.toarray() - np.eye(n)
        A[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        pi = scipy.linalg.solve(A, rhs)
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        if np.abs(pi @ P - pi).sum() < tol:
            return pi
    PT = P.T.tocsr()
    x = np.full(n, 1.0 / n)
    avg = x.copy()
    for k in range(1, maxiter + 1):
        x = PT @ x
        avg += (x - avg) / (k + 1)
        if k % 64 == 0:
            res = np.abs(PT @ avg - avg).sum()
            if res < tol:
                return avg / avg.sum()
    raise NoConvergence(f"Cesaro iteration did not reach residual {tol} in {maxiter} steps")


def cylinder_measure(pi, P, path) -> float:
    """Markov measure ``pi[x0] * P[x0, x1] * ... * P[x_{k-1}, x_k]`` of a state path."""
    P = _as_sparse(P)
    n = P.shape[0]
    path = list(path)
    if not path or any(not 0 <= int(i) < n for i in path):
        raise InvalidPath(f"path {path} is empty or has indices outside 0..{n - 1}")
    value = float(pi[path[0]])
    for u, v in zip(path, path[1:]):
        value *= P[u, v]
    return float(value)


def class_representative(params: FeresParams, theta: float) -> float:
    """Fold ``theta`` into ``[0, alpha]``: ``min(r, 2 alpha - r)`` with ``r = theta mod 2 alpha``."""
    if not 0.0 < theta < math.pi:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta}")
    period = 2.0 * params.alpha
    r = math.fmod(theta, period)
    return min(r, period - r)


def reduce_to_fundamental(alpha: float | FeresParams, theta: float) -> tuple[int, ...]:
    """Almost admissible word carrying ``theta`` into ``[0, alpha]``.

    Apply ``T3`` as many times as the angle stays non-negative; if the
    result lies in ``(alpha, 2 alpha)``, finish with ``T4`` then ``T3``.
    ``alpha = pi/6`` is accepted here.
    """
    if isinstance(alpha, FeresParams):
        alpha = alpha.alpha
    if not 0.0 < alpha <= math.pi / 6 + 1e-15:
        raise ValueError(f"alpha must lie in (0, pi/6], got {alpha}")
    if not 0.0 < theta < math.pi:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta}")
    word: list[int] = []
    t = theta
    while t > alpha and t - 2 * alpha >= 0.0:
        t -= 2 * alpha
        word.append(3)
    if t > alpha:
        word += [4, 3]
    return tuple(word)


def chain_summary(params: FeresParams, theta0: float, max_states: int = 10_000) -> dict:
    """States, matrix entries, irreducibility, period and stationary weights as plain data."""
    states = enumerate_states(params, theta0, max_states)
    out = {
        "alpha": params.alpha,
        "theta0": theta0,
        "n_states": len(states),
        "truncated": states.truncated,
        "states": states.angles.tolist(),
    }
    if states.truncated:
        return out
    P = build_matrix(states, params).tocoo()
    irreducible = is_irreducible(P)
    out["edges"] = [[int(i), int(j), float(p)] for i, j, p in zip(P.row, P.col, P.data)]
    out["irreducible"] = irreducible
    if irreducible:
        out["period"] = chain_period(P)
        out["stationary"] = stationary(P).tolist()
    return out
