"""Graph statistics and edge-corruption adversaries."""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .coupling import CouplingConfig, couple
from .errors import DomainError
from .graphs import Graph


@dataclass(frozen=True, eq=False)
class CenteredAdjacency:
    """``A_ij = 1 - p`` on edges, ``-p`` on non-edges, zero diagonal."""

    n: int
    p: float
    values: np.ndarray

    @classmethod
    def from_graph(cls, G: Graph, p: float) -> CenteredAdjacency:
        if not 0.0 <= p <= 1.0:
            raise DomainError("p must lie in [0, 1]")
        A = G.adj.astype(float) - p
        np.fill_diagonal(A, 0.0)
        A.setflags(write=False)
        return cls(G.n, p, A)

    def to_graph(self) -> Graph:
        return Graph(self.values + self.p > 0.5)


def _centered(G, p: float) -> np.ndarray:
    if isinstance(G, CenteredAdjacency):
        return G.values
    return CenteredAdjacency.from_graph(G, p).values


def signed_triangles(G: Graph, p: float) -> float:
    """Sum over unordered triples of ``(G_ij - p)(G_jk - p)(G_ki - p)``, as ``tr(A^3) / 6``."""
    A = _centered(G, p)
    return float(np.sum((A @ A) * A) / 6.0)


def lambda_max_abs(A: CenteredAdjacency, tol: float = 1e-6, max_iter: int | None = None) -> float:
    """Largest eigenvalue magnitude by implicitly restarted Lanczos (ARPACK).

    The start vector is fixed so results are reproducible.  On non-convergence
    the best Ritz value found is returned with a warning.
    """
    M = A.values if isinstance(A, CenteredAdjacency) else np.asarray(A, dtype=float)
    n = M.shape[0]
    if n < 2:
        raise DomainError("need n >= 2")
    if n <= 8:
        return float(np.max(np.abs(np.linalg.eigvalsh(M))))
    if not np.any(M):
        return 0.0
    v0 = np.random.default_rng(20240611).standard_normal(n)
    try:
        val = eigsh(M, k=1, which="LM", tol=tol, maxiter=max_iter or 10 * n, v0=v0,
                    return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            # Fall back to a few power steps from the same start vector.
            x = v0 / np.linalg.norm(v0)
            for _ in range(50):
                y = M @ x
                x = y / np.linalg.norm(y)
            est = float(abs(x @ M @ x))
        else:
            est = float(np.max(np.abs(exc.eigenvalues)))
        warnings.warn(f"Lanczos did not converge; returning best estimate {est:.6g}", RuntimeWarning)
        return est
    return float(abs(val[0]))


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True


def connectivity(G: Graph) -> bool:
    if G.n <= 1:
        return True
    uf = UnionFind(G.n)
    i, j = np.nonzero(np.triu(G.adj, 1))
    for a, b in zip(i.tolist(), j.tolist()):
        if uf.union(a, b) and uf.components == 1:
            return True
    return uf.components == 1


def min_degree(G: Graph) -> int:
    return int(G.degrees().min()) if G.n else 0


# -- adversaries ---------------------------------------------------------------

@dataclass(frozen=True)
class AdversaryBudget:
    epsilon: float
    budget: int

    @classmethod
    def for_graph(cls, n: int, p: float, epsilon: float) -> AdversaryBudget:
        if epsilon < 0:
            raise DomainError("epsilon must be nonnegative")
        return cls(epsilon, math.floor(epsilon * math.comb(n, 2) * p + 1e-9))


def _checked(G: Graph, out: Graph, budget: int) -> Graph:
    changed = G.distance(out)
    if changed > budget:
        raise AssertionError(f"adversary changed {changed} pairs, budget {budget}")
    return out


def adversary_clique(rng: np.random.Generator, G: Graph, budget: AdversaryBudget, k: int | None = None) -> Graph:
    """Plant a clique on ``k = floor(sqrt(2 budget))`` random vertices.

    Missing edges inside the chosen set are added in random order until the
    budget is spent.
    """
    b = budget.budget
    if k is None:
        k = math.isqrt(2 * b)
    k = min(k, G.n)
    if b == 0 or k < 2:
        return G
    verts = np.sort(rng.choice(G.n, size=k, replace=False))
    sub = G.adj[np.ix_(verts, verts)]
    ii, jj = np.nonzero(np.triu(~sub, 1))
    order = rng.permutation(ii.size)[:b]
    a = G.adj.copy()
    a[verts[ii[order]], verts[jj[order]]] = True
    return _checked(G, Graph(a), b)


def adversary_random(rng: np.random.Generator, G: Graph, budget: AdversaryBudget) -> Graph:
    """Toggle exactly ``min(budget, C(n, 2))`` distinct uniformly chosen pairs."""
    n_pairs = math.comb(G.n, 2)
    m = min(budget.budget, n_pairs)
    if m == 0:
        return G
    up = G.upper().copy()
    pick = rng.choice(n_pairs, size=m, replace=False)
    up[pick] ^= True
    a = np.zeros_like(G.adj)
    a[np.triu_indices(G.n, 1)] = up
    return _checked(G, Graph(a), budget.budget)


def adversary_coupling(rng: np.random.Generator, H: Graph, cfg: CouplingConfig) -> Graph:
    """Replace ``H`` by the geometric graph produced by coupling it.

    Changes land on fragile pairs, so their number tracks the fragile-set size
    of the run rather than an epsilon budget.
    """
    return couple(rng, H, cfg).realized


@dataclass(frozen=True)
class AdversaryContext:
    n: int
    p: float
    d: int
    epsilon: float
    hypothesis: str  # "RGG" or "NULL"
    margin_c: float = 1.0


def _adv_none(rng, G, ctx):
    return G


def _adv_clique(rng, G, ctx):
    return adversary_clique(rng, G, AdversaryBudget.for_graph(ctx.n, ctx.p, ctx.epsilon))


def _adv_random(rng, G, ctx):
    return adversary_random(rng, G, AdversaryBudget.for_graph(ctx.n, ctx.p, ctx.epsilon))


def _adv_coupling(rng, G, ctx):
    # Disguises null samples as geometric ones; geometric samples are left alone.
    if ctx.hypothesis == "RGG":
        return G
    return adversary_coupling(rng, G, CouplingConfig(ctx.n, ctx.d, ctx.p, margin_c=ctx.margin_c, record_drift=False))


ADVERSARIES: dict[str, Callable[[np.random.Generator, Graph, AdversaryContext], Graph]] = {
    "none": _adv_none,
    "clique": _adv_clique,
    "random": _adv_random,
    "coupling": _adv_coupling,
}


def apply_adversary(name: str, rng: np.random.Generator, G: Graph, ctx: AdversaryContext) -> Graph:
    try:
        fn = ADVERSARIES[name]
    except KeyError:
        raise DomainError(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)}") from None
    return fn(rng, G, ctx)
