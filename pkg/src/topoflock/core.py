"""Agent state, rank-based separation and communication matrices.

Agents are indexed from 0. Every rank computation orders the other agents by
Euclidean distance and breaks exact ties by agent index, so each row of a rank
table is a permutation of ``0..N-1`` with the agent itself at rank 0.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson

DISCRETE = "topological-discrete"
NORMALIZED = "topological-normalized"
METRIC = "metric"

_SIMPSON_INTERVALS = 1024


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AgentEnsemble:
    """Positions and velocities of N agents in d dimensions, shape (N, d) each."""

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if v.ndim == 1:
            v = v[:, None]
        if x.ndim != 2 or x.shape != v.shape:
            raise ValueError(f"positions {x.shape} and velocities {v.shape} must both be (N, d)")
        if x.shape[0] < 1:
            raise ValueError("an ensemble needs at least one agent")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("non-finite coordinate in ensemble")
        object.__setattr__(self, "positions", _frozen(x))
        object.__setattr__(self, "velocities", _frozen(v))

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def replace(self, positions=None, velocities=None) -> "AgentEnsemble":
        return AgentEnsemble(
            self.positions if positions is None else positions,
            self.velocities if velocities is None else velocities,
        )


@dataclass(frozen=True)
class WeightFunction:
    """Communication-rate function g and its normalizer.

    Build instances with the classmethods rather than the constructor:

    * :meth:`discrete` -- a table ``g(0), g(1), ...`` indexed by relative separation;
    * :meth:`normalized` and the named families (:meth:`constant`,
      :meth:`exponential`, :meth:`affine`) -- a function on [0, 1] of the
      normalized separation, with ``gamma`` its integral over [0, 1];
    * :meth:`metric` -- the classical ``lam / (sigma**2 + s**2)**beta`` of the
      metric distance.
    """

    mode: str
    gamma: float
    table: np.ndarray | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    params: tuple = ()
    lipschitz: float | None = None
    sup: float | None = None
    name: str = ""
    scaling: str = "gamma"  # "gamma": rows divided by gamma_N; "n": classical 1/N

    @classmethod
    def discrete(cls, table, scaling: str = "gamma") -> "WeightFunction":
        """Rates ``g(0), g(1), ...`` by relative separation.

        ``scaling="n"`` divides rows by the agent count instead of by
        ``gamma_N``, as in the classical metric model; rows then sum to
        ``gamma_N / N``.
        """
        if scaling not in ("gamma", "n"):
            raise ValueError(f"unknown scaling {scaling!r}")
        t = _frozen(np.ravel(table))
        if t.size == 0 or np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValueError("weight table must be nonempty, finite and nonnegative")
        gamma = float(t.sum())
        if gamma <= 0:
            raise ValueError("weight table is identically zero")
        return cls(DISCRETE, gamma, table=t, sup=float(t.max()), name="table", scaling=scaling)

    @classmethod
    def normalized(cls, func, gamma=None, lipschitz=None, sup=None, name="custom") -> "WeightFunction":
        """Wrap a vectorized nonnegative ``func`` on [0, 1].

        ``gamma`` defaults to a 1024-interval composite Simpson integral.
        """
        s = np.linspace(0.0, 1.0, _SIMPSON_INTERVALS + 1)
        vals = np.asarray(func(s), dtype=float)
        if np.any(vals < 0):
            raise ValueError("weight function must be nonnegative on [0, 1]")
        if gamma is None:
            gamma = float(simpson(vals, x=s))
        if sup is None:
            sup = float(vals.max())
        if gamma <= 0:
            raise ValueError("weight function integrates to zero on [0, 1]")
        return cls(NORMALIZED, float(gamma), func=func, lipschitz=lipschitz, sup=sup, name=name)

    @classmethod
    def constant(cls, c: float = 1.0) -> "WeightFunction":
        c = float(c)
        return cls.normalized(lambda s: np.full_like(np.asarray(s, dtype=float), c),
                              gamma=c, lipschitz=0.0, sup=c, name="constant")

    @classmethod
    def exponential(cls, strength: float, length: float) -> "WeightFunction":
        """``g(s) = (strength/length) exp(-s/length)``, the attraction profile of the swarm model."""
        amp = strength / length
        return cls.normalized(
            lambda s: amp * np.exp(-np.asarray(s, dtype=float) / length),
            gamma=strength * -np.expm1(-1.0 / length),
            lipschitz=amp / length,
            sup=amp,
            name="exponential",
        )

    @classmethod
    def affine(cls, start: float, end: float) -> "WeightFunction":
        """Linear interpolation from ``g(0) = start`` to ``g(1) = end``."""
        return cls.normalized(
            lambda s: start + (end - start) * np.asarray(s, dtype=float),
            gamma=0.5 * (start + end),
            lipschitz=abs(end - start),
            sup=max(start, end),
            name="affine",
        )

    @classmethod
    def metric(cls, lam: float, sigma: float, beta: float) -> "WeightFunction":
        if min(lam, sigma, beta) <= 0:
            raise ValueError("metric rate parameters must be positive")
        return cls(METRIC, 1.0, params=(float(lam), float(sigma), float(beta)),
                   sup=lam / sigma ** (2 * beta), name="metric")

    def __call__(self, s):
        if self.mode == DISCRETE:
            return self.table[np.asarray(s, dtype=int)]
        if self.mode == NORMALIZED:
            return np.asarray(self.func(np.asarray(s, dtype=float)), dtype=float)
        lam, sigma, beta = self.params
        s = np.asarray(s, dtype=float)
        return lam / (sigma**2 + s**2) ** beta

    def gamma_n(self, n: int) -> float:
        """Row normalizer for N agents: ``sum g(k)`` or ``sum g(k/N)`` over k < N."""
        if self.mode == DISCRETE:
            if self.table.size < n:
                raise ValueError(f"weight table has {self.table.size} entries, need at least {n}")
            return float(self.table[:n].sum())
        if self.mode == NORMALIZED:
            return float(self(np.arange(n) / n).sum())
        raise ValueError("metric weights have no rank normalizer")

    def row_normalizer(self, n: int) -> float:
        if self.scaling == "n":
            self.gamma_n(n)  # validates the table length
            return float(n)
        return self.gamma_n(n)

    def discretize(self, n: int) -> "WeightFunction":
        """Table ``g(k/N)``, k < N, of a normalized weight function."""
        if self.mode != NORMALIZED:
            raise ValueError("only normalized weight functions can be discretized")
        return WeightFunction.discrete(self(np.arange(n) / n))


@dataclass(frozen=True)
class Topology:
    rank_table: np.ndarray
    weights: np.ndarray
    fingerprint: str

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        """``diag(row sums) - G``; equal to ``I - G`` when G is row-stochastic."""
        return np.diag(self.weights.sum(axis=1)) - self.weights

    @property
    def adjacency(self) -> np.ndarray:
        """Boolean edge pattern, i -> j iff weights[i, j] > 0 and i != j."""
        a = self.weights > 0
        np.fill_diagonal(a, False)
        return a

    @classmethod
    def from_weights(cls, weights) -> "Topology":
        """Topology from an explicit matrix (no spatial configuration behind it)."""
        w = _frozen(weights)
        n = w.shape[0]
        if w.shape != (n, n) or np.any(w < 0):
            raise ValueError("weights must be a nonnegative square matrix")
        ranks = np.tile(np.arange(n), (n, 1))
        return cls(ranks, w, fingerprint(ranks, w > 0))


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    x = np.asarray(positions, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def distances_from(point, positions) -> np.ndarray:
    diff = np.asarray(positions, dtype=float) - np.asarray(point, dtype=float)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def radial_rates(positions, velocities, dist=None) -> np.ndarray:
    """d/dt |x_i - x_k| for every pair; |v_i - v_k| where the agents coincide."""
    x = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    dx = x[:, None, :] - x[None, :, :]
    dv = v[:, None, :] - v[None, :, :]
    if dist is None:
        dist = pairwise_distances(x)
    dot = np.einsum("ijk,ijk->ij", dx, dv)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(dist > 0, dot / dist, np.sqrt(np.einsum("ijk,ijk->ij", dv, dv)))
    return rate


def rank_table(positions, velocities=None, dist=None) -> np.ndarray:
    """N x N integer ranks; row i orders all agents by distance from agent i.

    With ``velocities`` given, exact distance ties are broken first by the
    radial rate (the agent approaching faster ranks lower), which yields the
    ordering valid on a short interval just after the current instant.
    Remaining ties go to the lower index.
    """
    if dist is None:
        dist = pairwise_distances(positions)
    n = dist.shape[0]
    key = dist.copy()
    np.fill_diagonal(key, -1.0)
    order = np.argsort(key, axis=1, kind="stable")
    if velocities is not None and n > 2:
        srt = np.take_along_axis(key, order, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            order = np.lexsort((radial_rates(positions, velocities, dist), key), axis=-1)
    ranks = np.empty((n, n), dtype=np.int64)
    ranks[np.arange(n)[:, None], order] = np.arange(n)
    return ranks


def rank_all(ensemble: AgentEnsemble, i: int) -> np.ndarray:
    d = distances_from(ensemble.positions[i], ensemble.positions)
    d[i] = -1.0
    order = np.argsort(d, kind="stable")
    ranks = np.empty(ensemble.n_agents, dtype=np.int64)
    ranks[order] = np.arange(ensemble.n_agents)
    return ranks


def relative_separation(ensemble: AgentEnsemble, i: int, j: int) -> int:
    """Number of agents strictly closer to agent i than agent j is."""
    d = distances_from(ensemble.positions[i], ensemble.positions)
    return int(np.count_nonzero(d < d[j]))


def normalized_separation(ensemble: AgentEnsemble, i: int, j: int) -> float:
    return rank_all(ensemble, i)[j] / ensemble.n_agents


def fingerprint(ranks: np.ndarray, pattern: np.ndarray) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(np.ascontiguousarray(ranks, dtype=np.int32).tobytes())
    h.update(np.packbits(np.asarray(pattern, dtype=bool)).tobytes())
    return h.hexdigest()


def pattern_fingerprint(adjacency: np.ndarray) -> str:
    h = hashlib.blake2b(digest_size=8)
    a = np.asarray(adjacency, dtype=bool)
    h.update(np.int64(a.shape[0]).tobytes())
    h.update(np.packbits(a).tobytes())
    return h.hexdigest()


def communication_matrix(ensemble: AgentEnsemble, weights: WeightFunction,
                         lookahead: bool = False) -> Topology:
    """Build the weighted interaction digraph of the current configuration.

    Topological modes give ``G[i, j] = g(rank_ij) / gamma_N`` (normalized
    functions are evaluated at ``rank_ij / N``), which is row-stochastic unless
    the table asks for the classical ``1/N`` scaling. Metric mode gives
    ``g(|x_i - x_j|) / N`` off the diagonal. ``lookahead`` breaks distance ties
    by radial rate, see :func:`rank_table`.
    """
    return topology_from_arrays(ensemble.positions,
                                ensemble.velocities if lookahead else None, weights)


def topology_from_arrays(positions: np.ndarray, velocities: np.ndarray | None,
                         weights: WeightFunction) -> Topology:
    n = positions.shape[0]
    dist = pairwise_distances(positions)
    ranks = rank_table(positions, velocities, dist)
    if weights.mode == METRIC:
        w = weights(dist) / n
        np.fill_diagonal(w, 0.0)
    else:
        norm = weights.row_normalizer(n)
        if norm <= 0:
            raise ValueError(f"gamma_N = 0 for N = {n}: no agent interacts")
        if weights.mode == DISCRETE:
            w = weights.table[ranks] / norm
        else:
            w = weights(ranks / n) / norm
    w.setflags(write=False)
    ranks.setflags(write=False)
    return Topology(ranks, w, fingerprint(ranks, w > 0))
