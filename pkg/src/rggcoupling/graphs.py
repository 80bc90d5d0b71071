"""Graphs, latent embeddings and their on-disk formats.

Graph text format: first line ``"n m"``, then ``m`` lines ``"i j"`` with
``0 <= i < j < n`` in ascending lexicographic order, UTF-8 with LF endings.

Embedding binary format: magic ``b"RGGE"``, little-endian ``u32 n``, ``u32 d``,
then ``n*d`` little-endian float64 values, column after column (vector 0 first).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

MAGIC = b"RGGE"


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph stored as a dense symmetric boolean matrix."""

    adj: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("adjacency must be square")
        a = a | a.T
        np.fill_diagonal(a, False)
        a.setflags(write=False)
        object.__setattr__(self, "adj", a)

    @classmethod
    def empty(cls, n: int) -> Graph:
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(np.ones((n, n), dtype=bool))

    @classmethod
    def from_edges(cls, n: int, edges) -> Graph:
        a = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise DomainError(f"bad edge ({i}, {j}) for n={n}")
            a[i, j] = a[j, i] = True
        return cls(a)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adj, 1).sum())

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adj, 1))
        return list(zip(i.tolist(), j.tolist()))

    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def upper(self) -> np.ndarray:
        """Edge indicators over unordered pairs in lexicographic ``(i, j)``, ``i < j`` order."""
        return self.adj[np.triu_indices(self.n, 1)]

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash(self.adj.tobytes())

    def distance(self, other: Graph) -> int:
        """Number of unordered pairs on which the graphs differ."""
        return int(np.triu(self.adj != other.adj, 1).sum())

    def issubgraph(self, other: Graph) -> bool:
        return bool(np.all(~self.adj | other.adj))

    def with_pairs_toggled(self, pairs) -> Graph:
        a = self.adj.copy()
        for i, j in pairs:
            a[i, j] = a[j, i] = ~a[i, j]
        return Graph(a)

    # -- text format ------------------------------------------------------
    def to_text(self) -> str:
        edges = self.edges()
        lines = [f"{self.n} {len(edges)}"] + [f"{i} {j}" for i, j in edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Graph:
        rows = [r for r in text.split("\n") if r.strip()]
        if not rows:
            raise DomainError("empty graph file")
        try:
            n, m = (int(t) for t in rows[0].split())
            edges = [tuple(int(t) for t in r.split()) for r in rows[1:]]
        except ValueError as exc:
            raise DomainError(f"malformed graph file: {exc}") from None
        if len(edges) != m or any(len(e) != 2 for e in edges):
            raise DomainError(f"header announces {m} edges, found {len(edges)}")
        if any(not (0 <= i < j < n) for i, j in edges):
            raise DomainError("edge lines must satisfy 0 <= i < j < n")
        if edges != sorted(set(edges)):
            raise DomainError("edges must be unique and in ascending lexicographic order")
        return cls.from_edges(n, edges)

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_text().encode("utf-8"))

    @classmethod
    def read(cls, path) -> Graph:
        return cls.from_text(Path(path).read_bytes().decode("utf-8"))


@dataclass(frozen=True, eq=False)
class LatentEmbedding:
    """``n`` unit vectors in ``R^d``; stored as rows, exposed as a ``d x n`` matrix."""

    rows: np.ndarray

    def __post_init__(self):
        r = np.ascontiguousarray(self.rows, dtype=float)
        if r.ndim != 2:
            raise DomainError("embedding must be two-dimensional")
        if r.size and np.max(np.abs(np.linalg.norm(r, axis=1) - 1.0)) > 1e-9:
            raise DomainError("embedding columns must have unit norm (1e-9)")
        r.setflags(write=False)
        object.__setattr__(self, "rows", r)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @property
    def vectors(self) -> np.ndarray:
        return self.rows.T

    def gram(self) -> np.ndarray:
        return self.rows @ self.rows.T

    def to_bytes(self) -> bytes:
        head = MAGIC + struct.pack("<II", self.n, self.d)
        return head + self.rows.astype("<f8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> LatentEmbedding:
        if data[:4] != MAGIC:
            raise DomainError("not an embedding file (bad magic)")
        n, d = struct.unpack("<II", data[4:12])
        body = np.frombuffer(data, dtype="<f8", offset=12)
        if body.size != n * d:
            raise DomainError(f"embedding payload has {body.size} values, expected {n * d}")
        return cls(body.reshape(n, d).astype(float))

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def read(cls, path) -> LatentEmbedding:
        return cls.from_bytes(Path(path).read_bytes())


def threshold_gram(gram: np.ndarray, tau: float) -> Graph:
    return Graph(gram >= tau)
