"""Graph and sample-pair data model plus the canonical on-disk dataset layout.

Every sample pairs a static function-call graph (FCG) with a dynamic
process-call graph (PCG) for one binary, together with a binary label and
the file-level byte entropy. Graphs are directed edge lists over dense,
zero-based node indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

__all__ = [
    "ValidationError",
    "DatasetFormatError",
    "Graph",
    "SamplePair",
    "Dataset",
    "canonicalize",
    "merge_graphs",
    "load_dataset",
    "store_dataset",
]


class ValidationError(ValueError):
    """Input violates a structural contract (bad edge, label, entropy, ...)."""


class DatasetFormatError(ValidationError):
    """A dataset file is malformed; carries the offending file and line."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + loc)
        self.path = str(path) if path is not None else None
        self.line = line


@dataclass(frozen=True)
class Graph:
    """Directed graph over nodes 0..node_count-1.

    Duplicate edges and self-loops are allowed on construction; use
    :func:`canonicalize` for the sorted, deduplicated form.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    directed: bool = True

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValidationError(f"node_count must be >= 1, got {self.node_count}")
        object.__setattr__(self, "edges", tuple((int(s), int(t)) for s, t in self.edges))
        for i, (s, t) in enumerate(self.edges):
            for v in (s, t):
                if v < 0:
                    raise ValidationError(f"edge {i} endpoint {v} < 0")
                if v >= self.node_count:
                    raise ValidationError(
                        f"edge {i} endpoint {v} >= node_count {self.node_count}"
                    )

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def canonicalize(g: Graph) -> Graph:
    """Sorted-by-(source, target), deduplicated copy of ``g``.

    Self-loops survive; node_count is unchanged. Idempotent.
    """
    return Graph(g.node_count, tuple(sorted(set(g.edges))), g.directed)


def merge_graphs(g1: Graph, g2: Graph) -> Graph:
    """Disjoint union: g2's node indices are shifted up by g1.node_count.

    No edges are added between the two components; the edge multiset is
    preserved.
    """
    off = g1.node_count
    shifted = tuple((s + off, t + off) for s, t in g2.edges)
    return Graph(g1.node_count + g2.node_count, g1.edges + shifted, directed=True)


@dataclass(frozen=True)
class SamplePair:
    """One binary: aligned FCG + PCG, label (0 benign / 1 malicious), file entropy."""

    id: str
    label: int
    fcg: Graph
    pcg: Graph
    entropy: float

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label!r}")
        if not (0.0 <= self.entropy <= 8.0):
            raise ValidationError(f"entropy must be in [0, 8], got {self.entropy!r}")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[SamplePair, ...]
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValidationError("dataset must contain at least one sample")
        seen: set[str] = set()
        for s in self.samples:
            if s.id in seen:
                raise ValidationError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)

    def labels(self) -> list[int]:
        return [s.label for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)


_MANIFEST = "manifest.jsonl"
_PROVENANCE = "provenance.json"
_GRAPH_DIR = "graphs"


def _write_edge_file(path: Path, g: Graph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# nodes={g.node_count} directed=true\n")
        for s, t in g.edges:
            fh.write(f"{s} {t}\n")


def _read_edge_file(path: Path) -> Graph:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = fh.read().split("\n")
    except FileNotFoundError:
        raise
    if not lines or not lines[0].startswith("# nodes="):
        raise DatasetFormatError("missing '# nodes=<N> directed=true' header", path, 1)
    header = lines[0]
    try:
        fields = header[2:].split(" ")
        kv = dict(f.split("=", 1) for f in fields)
        node_count = int(kv["nodes"])
        directed = kv["directed"] == "true"
    except (ValueError, KeyError):
        raise DatasetFormatError(f"malformed header {header!r}", path, 1)
    edges: list[tuple[int, int]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line or line.startswith("#"):
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise DatasetFormatError(f"malformed edge line {line!r}", path, lineno)
        try:
            s, t = int(parts[0]), int(parts[1])
        except ValueError:
            raise DatasetFormatError(f"malformed edge line {line!r}", path, lineno)
        edges.append((s, t))
    try:
        return Graph(node_count, tuple(edges), directed)
    except ValidationError as exc:
        raise DatasetFormatError(str(exc), path)


def store_dataset(dataset: Dataset, root_path: str | Path) -> None:
    """Write ``dataset`` in the canonical layout under ``root_path``.

    Graphs are canonicalized on write so that store/load round-trips are
    byte-stable. Layout::

        <root>/manifest.jsonl        one JSON object per sample
        <root>/graphs/<id>.fcg.txt   edge files referenced by the manifest
        <root>/graphs/<id>.pcg.txt
        <root>/provenance.json       only when provenance is non-empty
    """
    root = Path(root_path)
    (root / _GRAPH_DIR).mkdir(parents=True, exist_ok=True)
    with open(root / _MANIFEST, "w", encoding="utf-8", newline="\n") as fh:
        for s in dataset.samples:
            fcg_rel = f"{_GRAPH_DIR}/{s.id}.fcg.txt"
            pcg_rel = f"{_GRAPH_DIR}/{s.id}.pcg.txt"
            _write_edge_file(root / fcg_rel, canonicalize(s.fcg))
            _write_edge_file(root / pcg_rel, canonicalize(s.pcg))
            row = {
                "id": s.id,
                "label": s.label,
                "entropy": s.entropy,
                "fcg": fcg_rel,
                "pcg": pcg_rel,
            }
            fh.write(json.dumps(row) + "\n")
    if dataset.provenance:
        with open(root / _PROVENANCE, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(dict(dataset.provenance), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_dataset(root_path: str | Path) -> Dataset:
    """Load a canonical dataset; graphs are canonicalized on ingest.

    Raises :class:`DatasetFormatError` (naming file and line) for malformed
    content and propagates ``FileNotFoundError`` for missing files.
    """
    root = Path(root_path)
    manifest = root / _MANIFEST
    if not manifest.exists():
        raise FileNotFoundError(f"missing manifest: {manifest}")
    samples: list[SamplePair] = []
    ids: set[str] = set()
    with open(manifest, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"invalid JSON: {exc.msg}", manifest, lineno)
            for key in ("id", "label", "entropy", "fcg", "pcg"):
                if key not in row:
                    raise DatasetFormatError(f"missing key {key!r}", manifest, lineno)
            if row["label"] not in (0, 1):
                raise DatasetFormatError("label must be 0 or 1", manifest, lineno)
            if row["id"] in ids:
                raise DatasetFormatError(f"duplicate id {row['id']!r}", manifest, lineno)
            ids.add(row["id"])
            fcg = canonicalize(_read_edge_file(root / row["fcg"]))
            pcg = canonicalize(_read_edge_file(root / row["pcg"]))
            try:
                samples.append(
                    SamplePair(
                        id=row["id"],
                        label=row["label"],
                        fcg=fcg,
                        pcg=pcg,
                        entropy=float(row["entropy"]),
                    )
                )
            except ValidationError as exc:
                raise DatasetFormatError(str(exc), manifest, lineno)
    provenance: dict[str, Any] = {}
    if (root / _PROVENANCE).exists():
        with open(root / _PROVENANCE, "r", encoding="utf-8") as fh:
            provenance = json.load(fh)
    if not samples:
        raise DatasetFormatError("manifest contains no samples", manifest)
    return Dataset(tuple(samples), provenance)
