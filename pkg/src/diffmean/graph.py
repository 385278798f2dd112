"""Diffusion t-means on finite multigraphs via random-walk matrix powers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MultiGraph",
    "VertexDistribution",
    "transition_matrix",
    "graph_likelihood",
    "graph_diffusion_means",
    "read_edge_list",
]


@dataclass
class MultiGraph:
    """Undirected multigraph given by its edge-multiplicity matrix."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
            raise ValueError("edge multiplicities must form a square matrix")
        if np.any(c < 0) or not np.all(c == np.round(c)):
            raise ValueError("edge multiplicities must be nonnegative integers")
        if not np.array_equal(c, c.T):
            raise ValueError("edge multiplicities must be symmetric")
        self.counts = c.astype(float)
        if np.any(self.degrees() < 1):
            raise ValueError("graph has an isolated vertex (degree 0)")

    @property
    def n(self):
        return self.counts.shape[0]

    def degrees(self):
        return self.counts.sum(axis=1)

    @classmethod
    def from_edges(cls, n, edges):
        """Build from (i, j, multiplicity) triples with 0-based indices."""
        c = np.zeros((n, n), dtype=int)
        for i, j, mult in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) outside 0..{n - 1}")
            if mult < 0:
                raise ValueError("edge multiplicity must be >= 0")
            c[i, j] += mult
            if i != j:
                c[j, i] += mult
        return cls(c)


@dataclass
class VertexDistribution:
    """Probability vector over the vertices."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.shape[0] < 1:
            raise ValueError("probs must be a nonempty vector")
        if np.any(p < 0):
            raise ValueError("probs must be nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValueError("probs must sum to 1")
        self.probs = p

    @classmethod
    def point_mass(cls, n, j):
        p = np.zeros(n)
        p[j] = 1.0
        return cls(p)


def transition_matrix(g):
    """Row-stochastic one-step walk matrix P_ij = d_ij / d_i."""
    return g.counts / g.degrees()[:, None]


def _dist_vector(g, dist):
    p = dist.probs if isinstance(dist, VertexDistribution) else VertexDistribution(
        np.asarray(dist, dtype=float)
    ).probs
    if p.shape[0] != g.n:
        raise ValueError("distribution length does not match vertex count")
    return p


def graph_likelihood(g, t, dist):
    """Per-vertex likelihood L_t(i) = (P^t p)_i of originating the data."""
    if int(t) != t or t < 1:
        raise ValueError("walk length t must be a positive integer")
    p = _dist_vector(g, dist)
    pt = np.linalg.matrix_power(transition_matrix(g), int(t))
    return pt @ p


def graph_diffusion_means(g, t, dist, as_printed=False, tie_tol=1e-12):
    """Vertices optimizing the walk likelihood, ties included.

    By default returns the argmax of L_t (the most likely walk origins);
    ``as_printed=True`` returns the literal argmin instead, which is the
    complementary reading of the defining formula.
    """
    like = graph_likelihood(g, t, dist)
    target = like.min() if as_printed else like.max()
    return [i for i in range(g.n) if abs(like[i] - target) <= tie_tol]


def read_edge_list(path, n=None):
    """Parse an edge-list file of lines "i j multiplicity" (0-based).

    Lines starting with '#' are skipped; the vertex count defaults to
    1 + the largest index seen.
    """
    edges = []
    top = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'i j [multiplicity]'")
            try:
                i, j = int(parts[0]), int(parts[1])
                mult = int(parts[2]) if len(parts) == 3 else 1
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer field") from None
            edges.append((i, j, mult))
            top = max(top, i, j)
    if not edges:
        raise ValueError(f"{path}: no edges found")
    return MultiGraph.from_edges(n or top + 1, edges)
