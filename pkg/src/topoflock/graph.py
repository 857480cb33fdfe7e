"""Connectivity and consensus analysis of interaction digraphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import Topology


@dataclass(frozen=True)
class ConnectivityReport:
    scc_list: list[list[int]]  # reverse topological order: sinks first
    is_strong: bool
    is_weak: bool

    @property
    def n_components(self) -> int:
        return len(self.scc_list)


@dataclass(frozen=True)
class ConsensusCertificate:
    xi: np.ndarray
    valid: bool
    kernel_dim: int
    residual: float  # max |xi^T L|


def tarjan_scc(adjacency) -> list[list[int]]:
    """Strongly connected components of a boolean adjacency matrix.

    Iterative Tarjan; components come out in reverse topological order of the
    condensation, each sorted ascending.
    """
    adj = np.asarray(adjacency, dtype=bool)
    n = adj.shape[0]
    succ = [np.flatnonzero(adj[v]).tolist() for v in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        while work:
            v, k = work.pop()
            if k == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            while k < len(succ[v]):
                w = succ[v][k]
                k += 1
                if index[w] < 0:
                    work.append((v, k))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return out


def strongly_connected_components(topology: Topology) -> ConnectivityReport:
    adj = topology.adjacency
    sccs = tarjan_scc(adj)
    weak = len(tarjan_scc(adj | adj.T)) == 1
    return ConnectivityReport(sccs, len(sccs) == 1, weak)


def _kernel_dimension(lap: np.ndarray) -> int:
    s = scipy.linalg.svdvals(lap)
    tol = max(lap.shape) * np.finfo(float).eps * max(1.0, s[0])
    return int(np.count_nonzero(s <= tol * 1e3))


def left_null_vector(topology: Topology, tol: float = 1e-12,
                     max_iter: int = 100_000) -> ConsensusCertificate:
    """Nonnegative xi with xi^T L = 0 and sum(xi) = 1.

    Power iteration on the lazy chain I - L^T / (2 max_i L_ii), which is
    (I + G^T)/2 for row-stochastic G: same fixed points as G^T, but it cannot
    oscillate on periodic digraphs. Falls back to a dense SVD kernel when the
    iteration stagnates.
    """
    lap = topology.laplacian
    n = lap.shape[0]
    scale = 2.0 * max(float(np.max(np.diag(lap))), np.finfo(float).tiny)
    lazy = np.eye(n) - lap.T / scale
    xi = np.full(n, 1.0 / n)
    converged = False
    for _ in range(max_iter):
        nxt = lazy @ xi
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - xi)) <= tol:
            xi = nxt
            converged = True
            break
        xi = nxt
    if not converged or np.max(np.abs(xi @ lap)) > 1e-10:
        _, _, vt = scipy.linalg.svd(lap.T)
        cand = np.abs(vt[-1])
        xi = cand / cand.sum()
    kdim = _kernel_dimension(lap)
    strong = strongly_connected_components(topology).is_strong
    valid = strong and kdim == 1 and bool(np.all(xi > 0))
    return ConsensusCertificate(xi, valid, kdim, float(np.max(np.abs(xi @ lap))))


def predict_consensus(certificate: ConsensusCertificate, velocities) -> np.ndarray:
    """xi-weighted average of the velocities, the fixed-topology consensus."""
    if not certificate.valid:
        raise ValueError("certificate is invalid: topology not strongly connected")
    v = np.asarray(velocities, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    return certificate.xi @ v / certificate.xi.sum()


def random_strongly_connected(n: int, rng: np.random.Generator, edge_prob: float = 0.6) -> Topology:
    """Row-stochastic topology: a random directed Hamiltonian cycle plus random extra edges.

    The cycle guarantees strong connectivity; edge weights are uniform on
    [0.5, 1] before row normalization.
    """
    if n < 1:
        raise ValueError("need at least one agent")
    if n == 1:
        return Topology.from_weights(np.ones((1, 1)))
    adj = rng.uniform(size=(n, n)) < edge_prob
    perm = rng.permutation(n)
    adj[perm, np.roll(perm, -1)] = True
    np.fill_diagonal(adj, False)
    w = np.where(adj, rng.uniform(0.5, 1.0, (n, n)), 0.0)
    return Topology.from_weights(w / w.sum(axis=1, keepdims=True))
