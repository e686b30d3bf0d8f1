"""Undirected vertex- and edge-weighted similarity graph in CSR form.

The same structure holds the original kNN graph (level 0, all weights 1)
and the coarse graphs produced during multilevel partitioning.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import (
    EmptyVertexSet,
    FormatError,
    IndexOutOfRange,
    InvalidK,
    PartitionMismatch,
)

# Fixed query block size for kNN search. Independent of the worker count so
# the adjacency is byte-identical at any --threads setting.
_KNN_BLOCK = 256


@dataclass(frozen=True)
class SimilarityGraph:
    indptr: np.ndarray
    neighbors: np.ndarray
    edge_weights: np.ndarray
    vertex_weights: np.ndarray
    level: int = 0
    k: int | None = None

    def __post_init__(self):
        for a in (self.indptr, self.neighbors, self.edge_weights, self.vertex_weights):
            a.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return len(self.indptr) - 1

    @property
    def num_edges(self) -> int:
        return len(self.neighbors) // 2

    @property
    def total_edge_weight(self) -> int:
        return int(self.edge_weights.sum()) // 2

    @property
    def total_vertex_weight(self) -> int:
        return int(self.vertex_weights.sum())

    def degree(self, v: int) -> int:
        if not 0 <= v < self.num_vertices:
            raise IndexOutOfRange(f"vertex {v} out of range [0, {self.num_vertices})")
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors_of(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Sorted neighbor indices of v and the matching edge weights."""
        if not 0 <= v < self.num_vertices:
            raise IndexOutOfRange(f"vertex {v} out of range [0, {self.num_vertices})")
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.neighbors[lo:hi], self.edge_weights[lo:hi]

    def edge_list(self) -> np.ndarray:
        """Array of (u, v, w) rows with u < v, ordered lexicographically."""
        n = self.num_vertices
        src = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.indptr))
        mask = src < self.neighbors
        return np.column_stack([src[mask], self.neighbors[mask], self.edge_weights[mask]])


def graph_from_edges(
    n: int,
    edges,
    vertex_weights=None,
    level: int = 0,
    k: int | None = None,
) -> SimilarityGraph:
    """Build a SimilarityGraph from (u, v, w) triples with u != v.

    Each undirected edge appears once in `edges`; both directions are stored.
    """
    edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 3)
    if vertex_weights is None:
        vertex_weights = np.ones(n, dtype=np.int64)
    else:
        vertex_weights = np.asarray(vertex_weights, dtype=np.int64)
    if len(edges):
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        wgt = np.concatenate([edges[:, 2], edges[:, 2]])
        order = np.lexsort((dst, src))
        src, dst, wgt = src[order], dst[order], wgt[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
    else:
        src = dst = wgt = np.empty(0, dtype=np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
    return SimilarityGraph(
        indptr=indptr,
        neighbors=dst,
        edge_weights=wgt,
        vertex_weights=vertex_weights,
        level=level,
        k=k,
    )


def build_knn_graph(emb: EmbeddingMatrix, k: int, threads: int = 1) -> SimilarityGraph:
    """kNN graph under cosine similarity, symmetrized by union.

    An edge (u, v) exists if v is among u's k most similar other vertices or
    vice versa. Similarity ties break toward the lower candidate index.
    """
    n = emb.n
    if k < 1 or k >= n:
        raise InvalidK(f"k must satisfy 1 <= k <= N-1, got k={k}, N={n}")
    x = emb.vectors.astype(np.float64)
    x /= np.linalg.norm(x, axis=1)[:, None]

    def block_topk(start: int) -> np.ndarray:
        stop = min(start + _KNN_BLOCK, n)
        sims = x[start:stop] @ x.T
        out = np.empty((stop - start, k), dtype=np.int64)
        for i in range(stop - start):
            s = sims[i]
            s[start + i] = -np.inf
            kth = np.partition(s, n - 1 - k)[n - 1 - k]
            cand = np.nonzero(s >= kth)[0]
            cand = cand[np.lexsort((cand, -s[cand]))]
            out[i] = cand[:k]
        return out

    starts = range(0, n, _KNN_BLOCK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            blocks = list(ex.map(block_topk, starts))
    else:
        blocks = [block_topk(s) for s in starts]
    nbrs = np.vstack(blocks)

    src = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = nbrs.reshape(-1)
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    pairs = np.unique(np.column_stack([lo, hi]), axis=0)
    edges = np.column_stack([pairs, np.ones(len(pairs), dtype=np.int64)])
    return graph_from_edges(n, edges, level=0, k=k)


def induced_subgraph(g: SimilarityGraph, vertices) -> tuple[SimilarityGraph, np.ndarray]:
    """Subgraph on `vertices` plus the sub-index -> original-index mapping."""
    mapping = np.unique(np.asarray(list(vertices), dtype=np.int64))
    if mapping.size == 0:
        raise EmptyVertexSet("induced_subgraph needs a nonempty vertex set")
    if mapping[0] < 0 or mapping[-1] >= g.num_vertices:
        raise IndexOutOfRange(f"vertex set outside [0, {g.num_vertices})")
    member = np.zeros(g.num_vertices, dtype=bool)
    member[mapping] = True
    # gather only the members' adjacency slices (cost is their edges, not |E|)
    starts = g.indptr[mapping]
    counts = g.indptr[mapping + 1] - starts
    total = int(counts.sum())
    ends = np.cumsum(counts)
    idx = np.arange(total, dtype=np.int64) + np.repeat(starts - (ends - counts), counts)
    nbr = g.neighbors[idx]
    src = np.repeat(mapping, counts)
    keep = member[nbr] & (src < nbr)
    su = np.searchsorted(mapping, src[keep])
    sv = np.searchsorted(mapping, nbr[keep])
    edges = np.column_stack([su, sv, g.edge_weights[idx[keep]]])
    sub = graph_from_edges(
        len(mapping), edges, vertex_weights=g.vertex_weights[mapping], level=g.level
    )
    return sub, mapping


def edge_cut(g: SimilarityGraph, assignment) -> int:
    """Total weight of edges whose endpoints lie in different parts."""
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape != (g.num_vertices,):
        raise PartitionMismatch(
            f"assignment covers {assignment.shape} vertices, graph has {g.num_vertices}"
        )
    src = np.repeat(np.arange(g.num_vertices, dtype=np.int64), np.diff(g.indptr))
    mask = (src < g.neighbors) & (assignment[src] != assignment[g.neighbors])
    return int(g.edge_weights[mask].sum())


def graph_to_dict(g: SimilarityGraph) -> dict:
    return {
        "num_vertices": g.num_vertices,
        "k": g.k,
        "edges": g.edge_list().tolist(),
        "vertex_weights": g.vertex_weights.tolist(),
    }


def graph_from_dict(d: dict) -> SimilarityGraph:
    try:
        return graph_from_edges(
            int(d["num_vertices"]),
            d["edges"],
            vertex_weights=d.get("vertex_weights"),
            k=d.get("k"),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad graph JSON: {e}") from e


def save_graph(g: SimilarityGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(graph_to_dict(g), f)
        f.write("\n")


def load_graph(path: str) -> SimilarityGraph:
    with open(path, "r", encoding="utf-8") as f:
        return graph_from_dict(json.load(f))
