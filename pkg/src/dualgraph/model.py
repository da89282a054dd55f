"""Dual-branch graph classifier with a learnable softmax gate.

Two independent message-passing encoders (one per graph modality) produce
mean-pooled graph embeddings g1 and g2; a trainable gate alpha = softmax(w)
fuses them as g = alpha_1*g1 + alpha_2*g2, and a fully connected head maps
g to class probabilities. Single-graph and merged-graph configurations run
one branch and bypass the gate.

Propagation operates on the symmetrized adjacency with self-loops,
A~ = sym(A) + I, in one of three normalizations:

  gcn   D~^-1/2 A~ D~^-1/2      (also the SGC propagation)
  mean  D~^-1 A~                (neighborhood mean, GraphSAGE)
  sum   A~                      (neighborhood sum, GIN)

Per-step update rules (W unshared between branches, no per-step biases):

  GCN   H' = relu(gcn @ H @ W)
  SGC   H' = gcn @ H, repeated `layer` times, one linear map at the end
  GIN   H' = relu(relu((sum @ H) @ W1) @ W2)
  SAGE  H' = relu([H | mean @ H] @ W)
  MLP   H' = relu(H @ W), edges ignored

All arithmetic is float64.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np
from scipy import sparse

from . import autodiff as ad
from .autodiff import SparseMatrix, Tensor2
from .config import ArchKind, GraphType, ModelConfig
from .features import FeatureMode, build_features
from .graphs import Graph, SamplePair, ValidationError, merge_graphs

__all__ = [
    "GraphOps",
    "PreparedSample",
    "prepare_sample",
    "branch_names",
    "init_params",
    "Model",
    "gated_fusion",
    "global_pool",
    "save_params",
    "load_params",
]

DROPOUT_RATE = 0.5


class GraphOps:
    """Cached propagation matrices for one graph."""

    def __init__(self, g: Graph):
        n = g.node_count
        if g.edges:
            e = np.array(g.edges, dtype=np.int64)
            both = np.vstack([e, e[:, ::-1]])
            both = np.unique(both, axis=0)
            rows = np.concatenate([both[:, 0], np.arange(n)])
            cols = np.concatenate([both[:, 1], np.arange(n)])
        else:
            rows = cols = np.arange(n)
        data = np.ones(len(rows), dtype=np.float64)
        a_tilde = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
        a_tilde.sum_duplicates()
        deg = np.asarray(a_tilde.sum(axis=1)).ravel()
        d_inv_sqrt = 1.0 / np.sqrt(deg)
        d_inv = 1.0 / deg
        self.adj_sum = SparseMatrix(a_tilde)
        self.adj_gcn = SparseMatrix(
            sparse.diags(d_inv_sqrt) @ a_tilde @ sparse.diags(d_inv_sqrt)
        )
        self.adj_mean = SparseMatrix(sparse.diags(d_inv) @ a_tilde)


@dataclass
class PreparedSample:
    """Features and propagation matrices ready for repeated passes."""

    id: str
    label: int
    branches: dict[str, tuple[GraphOps, np.ndarray]]


def branch_names(graph_type: GraphType) -> list[str]:
    if graph_type is GraphType.DUAL:
        return ["fcg", "pcg"]
    return [graph_type.value]


def _branch_graph(sample: SamplePair, name: str) -> Graph:
    if name == "fcg":
        return sample.fcg
    if name == "pcg":
        return sample.pcg
    return merge_graphs(sample.fcg, sample.pcg)


def prepare_sample(sample: SamplePair, config: ModelConfig) -> PreparedSample:
    branches = {}
    for name in branch_names(config.graph_type):
        g = _branch_graph(sample, name)
        branches[name] = (GraphOps(g), build_features(g, sample.entropy, config.feature))
    return PreparedSample(sample.id, sample.label, branches)


def _branch_specs(config: ModelConfig, name: str) -> Iterator[tuple[str, tuple[int, int]]]:
    width = config.feature.width
    dim = config.dim
    arch = config.model_arch
    if arch is ArchKind.SGC:
        yield f"branch.{name}.lin.W", (width, dim)
        return
    in_dim = width
    for i in range(config.layer):
        if arch is ArchKind.GIN:
            yield f"branch.{name}.conv{i}.W1", (in_dim, dim)
            yield f"branch.{name}.conv{i}.W2", (dim, dim)
        elif arch is ArchKind.SAGE:
            yield f"branch.{name}.conv{i}.W", (2 * in_dim, dim)
        else:  # GCN, MLP
            yield f"branch.{name}.conv{i}.W", (in_dim, dim)
        in_dim = dim


def _param_specs(config: ModelConfig) -> Iterator[tuple[str, tuple[int, int], bool]]:
    """Yield (name, shape, is_bias) in deterministic construction order."""
    for name in branch_names(config.graph_type):
        for pname, shape in _branch_specs(config, name):
            yield pname, shape, False
    yield "gate.w", (1, 2), True  # zero-initialized like biases
    in_dim = config.dim
    for i in range(config.fc):
        out_dim = 2 if i == config.fc - 1 else config.dim
        yield f"head.fc{i}.W", (in_dim, out_dim), False
        yield f"head.fc{i}.b", (1, out_dim), True
        in_dim = out_dim


def init_params(config: ModelConfig, seed: int) -> dict[str, Tensor2]:
    """Glorot-uniform weights, zero biases, zero gate; deterministic per seed."""
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor2] = {}
    for name, shape, is_bias in _param_specs(config):
        if is_bias:
            values = np.zeros(shape)
        else:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            values = rng.uniform(-bound, bound, size=shape)
        params[name] = ad.param(values)
    return params


def global_pool(h: Tensor2) -> Tensor2:
    """Graph-level readout: column-wise mean over node embeddings."""
    return ad.mean_rows(h)


def gated_fusion(g1: Tensor2, g2: Tensor2, gate_w: Tensor2) -> Tensor2:
    """g = alpha_1*g1 + alpha_2*g2 with alpha = softmax(gate_w)."""
    return ad.gated_pair_sum(gate_w, g1, g2)


def _branch_forward(
    config: ModelConfig,
    name: str,
    ops: GraphOps,
    x: Tensor2,
    params: Mapping[str, Tensor2],
) -> Tensor2:
    arch = config.model_arch
    h = x
    if arch is ArchKind.SGC:
        for _ in range(config.layer):
            h = ad.spmm(ops.adj_gcn, h)
        return ad.matmul(h, params[f"branch.{name}.lin.W"])
    for i in range(config.layer):
        if arch is ArchKind.GCN:
            h = ad.relu(ad.matmul(ad.spmm(ops.adj_gcn, h), params[f"branch.{name}.conv{i}.W"]))
        elif arch is ArchKind.GIN:
            s = ad.spmm(ops.adj_sum, h)
            h = ad.relu(ad.matmul(s, params[f"branch.{name}.conv{i}.W1"]))
            h = ad.relu(ad.matmul(h, params[f"branch.{name}.conv{i}.W2"]))
        elif arch is ArchKind.SAGE:
            m = ad.spmm(ops.adj_mean, h)
            h = ad.relu(ad.matmul(ad.concat_cols(h, m), params[f"branch.{name}.conv{i}.W"]))
        else:  # MLP
            h = ad.relu(ad.matmul(h, params[f"branch.{name}.conv{i}.W"]))
    return h


def _head_forward(
    config: ModelConfig,
    g: Tensor2,
    params: Mapping[str, Tensor2],
    train: bool,
    rng: np.random.Generator | None,
) -> Tensor2:
    h = g
    for i in range(config.fc - 1):
        h = ad.relu(ad.add(ad.matmul(h, params[f"head.fc{i}.W"]), params[f"head.fc{i}.b"]))
        if train:
            if rng is None:
                raise ValidationError("training forward requires a dropout generator")
            h = ad.dropout(h, DROPOUT_RATE, rng)
    last = config.fc - 1
    logits = ad.add(ad.matmul(h, params[f"head.fc{last}.W"]), params[f"head.fc{last}.b"])
    return ad.row_softmax(logits)


class Model:
    """Bundles parameters with a config; tracks the last forward tape."""

    def __init__(self, config: ModelConfig, params: Mapping[str, Tensor2] | None = None, seed: int = 0):
        self.config = config
        self.params: dict[str, Tensor2] = (
            dict(params) if params is not None else init_params(config, seed)
        )
        expected = [(name, shape) for name, shape, _ in _param_specs(config)]
        got = [(name, p.shape) for name, p in self.params.items()]
        if got != expected:
            raise ValidationError("parameter set does not match config")
        self._probs_node: Tensor2 | None = None

    def forward(
        self,
        sample: SamplePair | PreparedSample,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """Class probability 2-vector for one sample; retains the tape."""
        prepared = sample if isinstance(sample, PreparedSample) else prepare_sample(sample, self.config)
        pooled: dict[str, Tensor2] = {}
        expected_width = self.config.feature.width
        for name, (ops, x) in prepared.branches.items():
            if x.shape[1] != expected_width:
                raise ValidationError(
                    f"feature width {x.shape[1]} does not match mode "
                    f"{self.config.feature.value!r} (expected {expected_width})"
                )
            h = _branch_forward(self.config, name, ops, ad.constant(x), self.params)
            pooled[name] = global_pool(h)
        if self.config.graph_type is GraphType.DUAL:
            g = gated_fusion(pooled["fcg"], pooled["pcg"], self.params["gate.w"])
        else:
            (g,) = pooled.values()
        probs = _head_forward(self.config, g, self.params, train, rng)
        self._probs_node = probs
        return probs.values[0].copy()

    def backward(self, loss_grad: np.ndarray) -> dict[str, np.ndarray]:
        """Accumulate d(loss)/d(param) for the most recent forward pass.

        ``loss_grad`` is d(loss)/d(probabilities), shape (2,). Returns the
        accumulated gradient buffers (zeros for parameters the pass never
        touched, e.g. the gate in single-graph mode).
        """
        if self._probs_node is None:
            raise ValidationError("backward called before forward")
        ad.backward(self._probs_node, np.asarray(loss_grad, dtype=np.float64).reshape(1, 2))
        self._probs_node = None
        return {
            name: (p.grad if p.grad is not None else np.zeros_like(p.values))
            for name, p in self.params.items()
        }

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def set_values(self, values: Mapping[str, np.ndarray]) -> None:
        for name, p in self.params.items():
            p.values[...] = values[name]

    def value_snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.values.copy() for name, p in self.params.items()}


_MAGIC = b"DGCKPT01"


def save_params(path, params: Mapping[str, Tensor2 | np.ndarray], fingerprint: str) -> None:
    """Binary checkpoint: versioned header, then name/shape/float64-LE blocks."""
    names = list(params.keys())
    header = json.dumps({"fingerprint": fingerprint, "params": names}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for name in names:
            p = params[name]
            v = p.values if isinstance(p, Tensor2) else np.asarray(p, dtype=np.float64)
            blob = name.encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<II", v.shape[0], v.shape[1]))
            fh.write(v.astype("<f8", copy=False).tobytes(order="C"))


def _read_exact(fh, n: int, path) -> bytes:
    blob = fh.read(n)
    if len(blob) != n:
        raise ValidationError(f"checkpoint truncated: {path}")
    return blob


def load_params(path) -> tuple[dict[str, Tensor2], str]:
    """Read a checkpoint back; bit-exact inverse of :func:`save_params`."""
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValidationError(f"not a parameter checkpoint: {path}")
        (hlen,) = struct.unpack("<I", _read_exact(fh, 4, path))
        try:
            header = json.loads(_read_exact(fh, hlen, path).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"checkpoint header corrupt: {path}") from exc
        params: dict[str, Tensor2] = {}
        for name in header["params"]:
            (nlen,) = struct.unpack("<I", _read_exact(fh, 4, path))
            read_name = _read_exact(fh, nlen, path).decode("utf-8")
            if read_name != name:
                raise ValidationError(f"checkpoint corrupt: expected {name!r}, found {read_name!r}")
            rows, cols = struct.unpack("<II", _read_exact(fh, 8, path))
            data = np.frombuffer(_read_exact(fh, rows * cols * 8, path), dtype="<f8").reshape(rows, cols)
            params[name] = ad.param(data)
    return params, header["fingerprint"]
