"""Initial node feature construction.

Three feature modes are supported: the Local Degree Profile (LDP), a
file-level Shannon-entropy broadcast, and their concatenation. Degrees are
taken on the undirected view of the graph (direction collapsed, self-loop
counting once and making a node its own neighbor), matching the
symmetrized propagation used by the encoders.
"""

from __future__ import annotations

import enum

import numpy as np

from .graphs import Graph, ValidationError

__all__ = [
    "FeatureMode",
    "shannon_entropy",
    "local_degree_profile",
    "build_features",
]


class FeatureMode(enum.Enum):
    LDP = "ldp"
    ENTROPY = "entropy"
    LDP_ENTROPY = "ldp+entropy"

    @property
    def width(self) -> int:
        return {FeatureMode.LDP: 5, FeatureMode.ENTROPY: 1, FeatureMode.LDP_ENTROPY: 6}[self]

    @classmethod
    def parse(cls, text: str) -> "FeatureMode":
        for mode in cls:
            if mode.value == text:
                return mode
        raise ValidationError(f"unknown feature mode {text!r}")


def shannon_entropy(data: bytes | bytearray | memoryview) -> float:
    """Byte-level Shannon entropy of ``data`` in bits per byte, in [0, 8].

    H = -sum_i p_i log2 p_i over the 256 byte values, with p_i the
    empirical byte frequency; zero-count symbols are skipped.
    """
    buf = np.frombuffer(bytes(data), dtype=np.uint8)
    if buf.size == 0:
        raise ValidationError("entropy of an empty byte sequence is undefined")
    counts = np.bincount(buf, minlength=256).astype(np.float64)
    p = counts[counts > 0] / buf.size
    # + 0.0 turns the single-symbol case's -0.0 into +0.0
    return float(-(p * np.log2(p)).sum()) + 0.0


def _undirected_neighbors(g: Graph) -> list[set[int]]:
    nbrs: list[set[int]] = [set() for _ in range(g.node_count)]
    for s, t in g.edges:
        if s == t:
            nbrs[s].add(s)
        else:
            nbrs[s].add(t)
            nbrs[t].add(s)
    return nbrs


def local_degree_profile(g: Graph) -> np.ndarray:
    """Per-node 5-vector: [deg, min, max, mean, std] of neighbor degrees.

    std is the population standard deviation; a node with no neighbors gets
    an all-zero row.
    """
    nbrs = _undirected_neighbors(g)
    deg = np.array([len(n) for n in nbrs], dtype=np.float64)
    out = np.zeros((g.node_count, 5), dtype=np.float64)
    out[:, 0] = deg
    for v, neigh in enumerate(nbrs):
        if not neigh:
            continue
        nd = deg[list(neigh)]
        out[v, 1] = nd.min()
        out[v, 2] = nd.max()
        out[v, 3] = nd.mean()
        out[v, 4] = nd.std()
    return out


def build_features(g: Graph, entropy: float, mode: FeatureMode) -> np.ndarray:
    """Node feature matrix for ``g`` under ``mode``.

    LDP -> (n, 5); ENTROPY -> (n, 1) constant rows; LDP_ENTROPY -> (n, 6)
    with the LDP columns first and the entropy column last.
    """
    if not (0.0 <= entropy <= 8.0):
        raise ValidationError(f"entropy must be in [0, 8], got {entropy!r}")
    if mode is FeatureMode.LDP:
        return local_degree_profile(g)
    ent_col = np.full((g.node_count, 1), float(entropy), dtype=np.float64)
    if mode is FeatureMode.ENTROPY:
        return ent_col
    return np.hstack([local_degree_profile(g), ent_col])
