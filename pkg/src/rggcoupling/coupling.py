"""Sequential flip coupling from an Erdos-Renyi graph to a spherical RGG.

Vertices are processed in order ``j = 0..n-1``.  Vertex ``j`` starts from a
fresh uniform vector and is flipped around the already-final vectors
``V_0, ..., V_{j-1}`` in increasing order, the bit for pair ``(i, j)`` being
the input edge ``H_ij``.  After the pass ``V_j`` is final.  The realized graph
thresholds the final Gram matrix at ``tau``; it agrees with ``H`` except on
pairs whose inner product moved across ``tau`` after their flip.

:func:`sweep` keeps the inner products ``<V_i, z>`` of the moving vector
against all final vectors in a cache and updates them in ``O(j)`` after each
flip using the Gram matrix of final vectors.  :func:`sweep_reference` is the
literal ``O(n^2 d)`` pair loop and serves as a test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError
from .flip_map import flip, flip_interval, flip_linear
from .graphs import Graph, LatentEmbedding
from .sphere_law import Interval, SphericalLaw, law_for, sample_sphere

# Cached inner products closer than this to tau (or to an interval end) are
# recomputed exactly before deciding whether to flip.
_RECHECK = 1e-9


def margin_unit(n: int, p: float, d: int) -> float:
    """``max(sqrt(np), sqrt(log n)) * log(n)^{3/2} / d``; the margin for ``c = 1``."""
    logn = math.log(max(n, 2))
    return max(math.sqrt(n * p), math.sqrt(logn)) * logn**1.5 / d


def margin_formula(n: int, p: float, d: int, c: float) -> float:
    return c * margin_unit(n, p, d)


@dataclass(frozen=True)
class CouplingConfig:
    """Parameters of one coupling run.

    ``margin`` is an explicit fragility margin, ``None`` for the formula with
    constant ``margin_c``, or ``"observed"`` for the run's own max drift.
    """

    n: int
    d: int
    p: float
    margin: float | str | None = None
    margin_c: float = 1.0
    record_drift: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.d < 3:
            raise DomainError("d must be at least 3")
        if not 0.0 < self.p <= 0.5:
            raise DomainError("p must lie in (0, 1/2]")
        if self.n < 1:
            raise DomainError("n must be positive")
        if isinstance(self.margin, str):
            if self.margin != "observed":
                raise DomainError(f"unknown margin rule {self.margin!r}")
            if not self.record_drift:
                raise DomainError("margin='observed' needs record_drift")
        elif self.margin is not None and not self.margin >= 0:
            raise DomainError("margin must be nonnegative")
        if not self.margin_c > 0:
            raise DomainError("margin_c must be positive")

    @property
    def law(self) -> SphericalLaw:
        return law_for(self.d, self.p)


@dataclass(frozen=True, eq=False)
class CouplingOutput:
    input: Graph
    embedding: LatentEmbedding
    realized: Graph
    margin: float
    fragile: np.ndarray          # (k, 2) pairs i < j
    disagreements: np.ndarray    # (k, 2) pairs i < j
    at_flip: np.ndarray | None   # (n, n); [i, j] for i < j is <V_i, V_j> right after the (i, j) flip
    flips: int

    @property
    def drift(self) -> np.ndarray | None:
        """Per-pair drift over the upper triangle, in lexicographic pair order."""
        if self.at_flip is None:
            return None
        iu = np.triu_indices(self.input.n, 1)
        return np.abs(self.embedding.gram()[iu] - self.at_flip[iu])

    @property
    def n_pairs(self) -> int:
        n = self.input.n
        return n * (n - 1) // 2

    def disagreements_in_fragile(self) -> bool:
        fr = {tuple(e) for e in self.fragile.tolist()}
        return all(tuple(e) in fr for e in self.disagreements.tolist())


@dataclass
class SweepResult:
    final: np.ndarray
    gram: np.ndarray
    at_flip: np.ndarray
    flipped: np.ndarray
    in_interval: np.ndarray


def _candidates(x, start, bits, tau, iv):
    seg = x[start:]
    act = ((seg >= tau) != bits[start:]) | (np.abs(seg - tau) < _RECHECK)
    if iv is not None:
        act &= (seg >= iv.lo - _RECHECK) & (seg <= iv.hi + _RECHECK)
    hits = np.flatnonzero(act)
    return None if hits.size == 0 else start + int(hits[0])


def sweep(law: SphericalLaw, start: np.ndarray, bits: np.ndarray, iv: Interval | None = None,
          block: int = 32) -> SweepResult:
    """One lexicographic pass: vertex ``j`` is flipped around final ``V_i`` for ``i < j``.

    ``start`` holds the starting vectors as rows, ``bits`` is a symmetric 0/1
    matrix.  With ``iv`` every flip is the interval variant.

    Each flip is ``z <- alpha z + beta V_i``, so the inner products ``y_k =
    <V_k, z>`` follow ``y <- alpha y + beta gram[i]``.  Their starting values
    ``<V_k, start_j>`` are computed in blocks of ``block`` vertices with one
    matrix product per block.  Values within ``1e-9`` of a decision boundary
    are recomputed exactly before use.
    """
    n, _ = start.shape
    start = np.asarray(start, dtype=float)
    bits = np.asarray(bits, dtype=bool)
    tau = law.tau
    fin = np.empty_like(start)
    g_run = np.eye(n)
    at_flip = np.full((n, n), np.nan)
    flipped = np.zeros((n, n), dtype=bool)
    in_iv = np.zeros((n, n), dtype=bool)
    for j0 in range(0, n, block):
        j1 = min(j0 + block, n)
        cross = np.empty((j1, j1 - j0))
        cross[:j0] = fin[:j0] @ start[j0:j1].T
        for j in range(j0, j1):
            z = start[j].copy()
            if j:
                y = cross[:j, j - j0].copy()
                b = bits[j, :j]
                done = 0
                i = _candidates(y, 0, b, tau, iv)
                while i is not None:
                    out, rec, alpha, beta = flip_linear(law, fin[i], z, int(b[i]), iv)
                    at_flip[done:i, j] = y[done:i]
                    if rec.flipped:
                        flipped[i, j] = True
                        y = alpha * y + beta * g_run[i, :j]
                        z = out
                    y[i] = rec.post_inner
                    at_flip[i, j] = y[i]
                    done = i + 1
                    i = _candidates(y, i + 1, b, tau, iv) if i + 1 < j else None
                at_flip[done:j, j] = y[done:j]
                g_run[j, :j] = y
                g_run[:j, j] = y
                if iv is not None:
                    # Unflipped pairs keep their pre-flip value; flipped ones were inside.
                    x = at_flip[:j, j]
                    in_iv[:j, j] = flipped[:j, j] | ((x >= iv.lo) & (x <= iv.hi))
            fin[j] = z
            if j + 1 < j1:
                cross[j, j + 1 - j0:] = start[j + 1:j1] @ z
    gram = fin @ fin.T
    np.fill_diagonal(gram, 1.0)
    return SweepResult(fin, gram, at_flip, flipped, in_iv)


def sweep_reference(law: SphericalLaw, start: np.ndarray, bits: np.ndarray, iv: Interval | None = None) -> SweepResult:
    """Literal pair loop using :func:`flip`; slow, used as an oracle."""
    n, _ = start.shape
    bits = np.asarray(bits, dtype=bool)
    fin = np.empty_like(start, dtype=float)
    at_flip = np.full((n, n), np.nan)
    flipped = np.zeros((n, n), dtype=bool)
    in_iv = np.zeros((n, n), dtype=bool)
    for j in range(n):
        z = np.array(start[j], dtype=float)
        for i in range(j):
            if iv is None:
                z, rec = flip(law, fin[i], z, int(bits[j, i]))
            else:
                z, rec = flip_interval(law, fin[i], z, int(bits[j, i]), iv)
                in_iv[i, j] = iv.lo <= rec.pre_inner <= iv.hi
            at_flip[i, j] = rec.post_inner
            flipped[i, j] = rec.flipped
        fin[j] = z
    return SweepResult(fin, fin @ fin.T, at_flip, flipped, in_iv)


def sample_er(rng: np.random.Generator, n: int, p: float) -> Graph:
    """Each unordered pair is an edge independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    iu = np.triu_indices(n, 1)
    a = np.zeros((n, n), dtype=bool)
    a[iu] = rng.random(iu[0].size) < p
    return Graph(a)


def sample_embedding(rng: np.random.Generator, n: int, d: int) -> LatentEmbedding:
    return LatentEmbedding(sample_sphere(rng, d, n))


def realize_rgg(embedding: LatentEmbedding, law: SphericalLaw) -> Graph:
    if embedding.d != law.d:
        raise DomainError(f"embedding dimension {embedding.d} does not match law dimension {law.d}")
    return Graph(embedding.gram() >= law.tau)


def sample_rgg(rng: np.random.Generator, n: int, d: int, p: float):
    """``(Graph, LatentEmbedding)`` with i.i.d. uniform vectors thresholded at ``tau``."""
    emb = sample_embedding(rng, n, d)
    return realize_rgg(emb, law_for(d, p)), emb


def sample_rgg_gram(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Gram matrix of ``n`` i.i.d. uniform unit vectors in ``R^d``.

    For ``d >= n`` this uses the Bartlett factor of a Wishart matrix,
    ``O(n^3)`` work independent of ``d``; otherwise it samples the vectors.
    """
    if d < n:
        rows = sample_sphere(rng, d, n)
        return rows @ rows.T
    L = np.zeros((n, n))
    L[np.diag_indices(n)] = np.sqrt(rng.chisquare(d - np.arange(n)))
    il = np.tril_indices(n, -1)
    L[il] = rng.standard_normal(il[0].size)
    W = L @ L.T
    s = 1.0 / np.sqrt(np.diag(W))
    G = W * s[:, None] * s[None, :]
    np.fill_diagonal(G, 1.0)
    return G


def _pairs(mask: np.ndarray) -> np.ndarray:
    i, j = np.nonzero(np.triu(mask, 1))
    return np.column_stack([i, j]).astype(np.int64)


def finish(H: Graph, law: SphericalLaw, res: SweepResult, cfg: CouplingConfig, flips: int) -> CouplingOutput:
    emb = LatentEmbedding(res.final)
    gram = res.gram
    G = Graph(gram >= law.tau)
    at_flip = res.at_flip if cfg.record_drift else None
    if cfg.margin == "observed":
        iu = np.triu_indices(H.n, 1)
        margin = float(np.max(np.abs(gram[iu] - res.at_flip[iu]), initial=0.0))
    elif cfg.margin is None:
        margin = margin_formula(cfg.n, cfg.p, cfg.d, cfg.margin_c)
    else:
        margin = float(cfg.margin)
    return CouplingOutput(
        input=H,
        embedding=emb,
        realized=G,
        margin=margin,
        fragile=_pairs(np.abs(gram - law.tau) < margin),
        disagreements=_pairs(G.adj != H.adj),
        at_flip=at_flip,
        flips=flips,
    )


def couple(rng: np.random.Generator, H: Graph, cfg: CouplingConfig, reference: bool = False) -> CouplingOutput:
    """Run the flip coupling on ``H``; ``rng`` supplies only the starting vectors."""
    if H.n != cfg.n:
        raise DomainError(f"graph has {H.n} vertices, config says {cfg.n}")
    law = cfg.law
    start = sample_sphere(rng, cfg.d, cfg.n)
    res = (sweep_reference if reference else sweep)(law, start, H.adj)
    return finish(H, law, res, cfg, int(res.flipped.sum()))


def couple_er(rng: np.random.Generator, cfg: CouplingConfig) -> CouplingOutput:
    """Draw ``H ~ G(n, p)`` and the starting vectors from two child streams, then couple."""
    rng_h, rng_v = rng.spawn(2)
    return couple(rng_v, sample_er(rng_h, cfg.n, cfg.p), cfg)


@dataclass(frozen=True, eq=False)
class Dominance:
    H: Graph
    G_minus: Graph
    G_plus: Graph
    margin: float
    minus_in_h: bool
    h_in_plus: bool
    output: CouplingOutput = field(repr=False)

    @property
    def holds(self) -> bool:
        return self.minus_in_h and self.h_in_plus


def dominance_triple(rng: np.random.Generator, cfg: CouplingConfig) -> Dominance:
    """Couple ``H ~ G(n, p)`` and sandwich it between the final Gram matrix
    thresholded at ``tau + margin`` (lower graph) and ``tau - margin`` (upper graph)."""
    out = couple_er(rng, cfg)
    gram = out.embedding.gram()
    tau = cfg.law.tau
    g_minus = Graph(gram >= tau + out.margin)
    g_plus = Graph(gram >= tau - out.margin)
    return Dominance(
        H=out.input,
        G_minus=g_minus,
        G_plus=g_plus,
        margin=out.margin,
        minus_in_h=g_minus.issubgraph(out.input),
        h_in_plus=out.input.issubgraph(g_plus),
        output=out,
    )


@dataclass(frozen=True)
class UniformityReport:
    direction_stats: tuple[float, ...]
    direction_pvalues: tuple[float, ...]
    pair_stat: float
    pair_pvalue: float
    alpha: float

    @property
    def pvalues(self) -> tuple[float, ...]:
        return self.direction_pvalues + (self.pair_pvalue,)

    @property
    def passed(self) -> bool:
        """Family-wise decision: each of the ``k + 1`` tests runs at ``alpha / (k + 1)``."""
        level = self.alpha / len(self.pvalues)
        return all(pv >= level for pv in self.pvalues)


def uniformity_report(embedding: LatentEmbedding, law: SphericalLaw, directions, alpha: float = 1e-3) -> UniformityReport:
    """KS tests of ``<w, V_i>`` for each fixed direction ``w`` and of
    ``<V_{2k}, V_{2k+1}>`` over disjoint pairs, all against the coordinate law."""
    W = np.atleast_2d(np.asarray(directions, dtype=float))
    if W.shape[0] < 1:
        raise DomainError("need at least one direction")
    if W.shape[1] != embedding.d:
        raise DomainError("direction dimension mismatch")
    W = W / np.linalg.norm(W, axis=1, keepdims=True)
    proj = embedding.rows @ W.T
    d_stats, d_pv = [], []
    for col in proj.T:
        r = stats.kstest(col, law.cdf)
        d_stats.append(float(r.statistic))
        d_pv.append(float(r.pvalue))
    m = embedding.n // 2
    rows = embedding.rows
    pair_vals = np.einsum("ij,ij->i", rows[0 : 2 * m : 2], rows[1 : 2 * m : 2])
    if m:
        r = stats.kstest(pair_vals, law.cdf)
        p_stat, p_pv = float(r.statistic), float(r.pvalue)
    else:
        p_stat, p_pv = 0.0, 1.0
    return UniformityReport(tuple(d_stats), tuple(d_pv), p_stat, p_pv, alpha)


def drift_summary(out: CouplingOutput) -> dict[str, float]:
    dr = out.drift
    if dr is None:
        raise DomainError("drift was not recorded (record_drift=False)")
    if dr.size == 0:
        return {"max": 0.0, "mean": 0.0, "q50": 0.0, "q90": 0.0, "q99": 0.0}
    q50, q90, q99 = np.quantile(dr, [0.5, 0.9, 0.99])
    return {"max": float(dr.max()), "mean": float(dr.mean()), "q50": float(q50), "q90": float(q90), "q99": float(q99)}


def fit_margin_constant(max_drifts, settings) -> float:
    """Smallest ``c`` with ``max drift <= c * margin_unit`` on every calibration run.

    ``settings`` lists the ``(n, p, d)`` of each run.
    """
    ratios = [md / margin_unit(n, p, d) for md, (n, p, d) in zip(max_drifts, settings)]
    if not ratios:
        raise DomainError("no calibration runs")
    return float(max(ratios))
