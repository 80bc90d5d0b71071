"""Experiment harness: threshold curves, FKG check, scaling table, ROC tables.

Every trial draws from ``stream(seed, label, trial_index)``, so results do not
depend on the number of worker processes.  Tables are written as CSV with a
header row; floats are written with ``repr`` so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

from .coupling import (
    CouplingConfig,
    couple,
    drift_summary,
    margin_unit,
    sample_er,
    sample_rgg_gram,
)
from .errors import DomainError
from .graphs import Graph
from .graphstats import AdversaryContext, apply_adversary, connectivity, min_degree
from .robust_test import (
    Calibration,
    decide_spectral,
    decide_triangle,
    decide_witness,
    spectral_threshold,
    triangle_threshold,
)
from .sphere_law import law_for, sample_sphere
from .streams import run_trials, stream

PROPERTIES = {
    "connectivity": connectivity,
    "min_degree": lambda G: min_degree(G) >= 1,
}


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# -- sharp thresholds ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ThresholdCurve:
    property: str
    model: str  # "ER" or "RGG"
    d: int | None
    p_grid: np.ndarray
    trials: int
    f: np.ndarray        # empirical frequencies
    f_fit: np.ndarray    # isotonic fit
    p_c: float
    window: float
    epsilon: float = 0.1

    def to_csv(self) -> str:
        rows = [(float(p), float(a), float(b)) for p, a, b in zip(self.p_grid, self.f, self.f_fit)]
        return to_csv(("p", "f", "f_isotonic"), rows)


def invert_curve(p_grid: np.ndarray, f_fit: np.ndarray, level: float) -> float:
    """Smallest ``p`` where the piecewise-linear nondecreasing curve reaches ``level``."""
    idx = np.flatnonzero(f_fit >= level)
    if idx.size == 0:
        return math.nan
    k = int(idx[0])
    if k == 0:
        return float(p_grid[0]) if f_fit[0] == level else math.nan
    f0, f1 = f_fit[k - 1], f_fit[k]
    p0, p1 = p_grid[k - 1], p_grid[k]
    return float(p0 + (level - f0) * (p1 - p0) / (f1 - f0))


def _threshold_trial(rng, prop, model, n, d, p_grid):
    """One latent draw per trial, thresholded at every grid point."""
    test = PROPERTIES[prop]
    iu = np.triu_indices(n, 1)
    if model == "ER":
        u = rng.random(iu[0].size)
        graphs = []
        for p in p_grid:
            a = np.zeros((n, n), dtype=bool)
            a[iu] = u < p
            graphs.append(Graph(a))
    else:
        gram = sample_rgg_gram(rng, n, d)
        graphs = [Graph(gram >= law_for(d, float(p)).tau) for p in p_grid]
    return [bool(test(G)) for G in graphs]


def run_threshold(prop: str, model: str, n: int, p_grid, trials: int, seed: int, d: int | None = None,
                  workers: int = 1, epsilon: float = 0.1) -> ThresholdCurve:
    """Monte Carlo ``f(p) = P(property)`` on a grid, isotonic fit, then ``p_c`` and the window.

    Within a trial all grid points share one latent draw (uniform edge
    variables for ER, one Gram matrix for RGG), so each trial's indicator is
    monotone in ``p``.
    """
    if prop not in PROPERTIES:
        raise DomainError(f"unknown property {prop!r}")
    if model not in ("ER", "RGG"):
        raise DomainError("model must be ER or RGG")
    if model == "RGG" and d is None:
        raise DomainError("RGG model needs d")
    grid = np.asarray(p_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise DomainError("p grid must be strictly increasing")
    if trials < 20:
        raise DomainError("need at least 20 trials per grid point")
    label = f"threshold-{prop}-{model}-{d}"
    hits = run_trials(_threshold_trial, seed, label, trials, workers,
                      prop=prop, model=model, n=n, d=d, p_grid=tuple(grid.tolist()))
    f = np.mean(np.array(hits, dtype=float), axis=0)
    f_fit = isotonic_regression(f, increasing=True).x
    p_c = invert_curve(grid, f_fit, 0.5)
    lo = invert_curve(grid, f_fit, epsilon)
    hi = invert_curve(grid, f_fit, 1.0 - epsilon)
    if math.isnan(p_c):
        warnings.warn("threshold curve never reaches 1/2 on this grid", RuntimeWarning)
    return ThresholdCurve(prop, model, d, grid, trials, f, f_fit, p_c, hi - lo, epsilon)


# -- FKG ------------------------------------------------------------------------

@dataclass(frozen=True)
class FkgEstimate:
    N: int
    counts: tuple[int, int, int, int]   # triples with k = 0..3 edges
    mu: tuple[float, ...]              # per-configuration probabilities
    mu_se: tuple[float, ...]
    a_hat: float
    a_se: float
    pair_sum: float                    # mu(3) + mu(2)
    pair_sum_se: float
    gap: float                         # mu(1)^2 - mu(2) mu(0)
    gap_se: float
    identity: float                    # sum_k C(3,k) mu(k)

    def to_csv(self) -> str:
        rows = [(k, self.counts[k], self.mu[k], self.mu_se[k]) for k in range(4)]
        return to_csv(("k", "count", "mu", "se"), rows)


def _fkg_chunk(rng, k, d, sizes):
    size = sizes[k]
    V = sample_sphere(rng, d, 3 * size).reshape(size, 3, d)
    e01 = np.einsum("ij,ij->i", V[:, 0], V[:, 1]) >= 0
    e12 = np.einsum("ij,ij->i", V[:, 1], V[:, 2]) >= 0
    e02 = np.einsum("ij,ij->i", V[:, 0], V[:, 2]) >= 0
    k = e01.astype(int) + e12 + e02
    return np.bincount(k, minlength=4)


def run_fkg(seed: int, d: int, N: int, workers: int = 1, chunk: int = 100_000) -> FkgEstimate:
    """Edge-count classes of three uniform vectors at density 1/2 (threshold 0)."""
    if d < 3:
        raise DomainError("d must be at least 3")
    sizes = tuple([chunk] * (N // chunk) + ([N % chunk] if N % chunk else []))
    parts = run_trials(_fkg_chunk, seed, f"fkg-{d}", len(sizes), workers, with_index=True, d=d, sizes=sizes)
    counts = np.sum(parts, axis=0)
    pi = counts / N
    binom = np.array([1, 3, 3, 1])
    mu = pi / binom
    cov = (np.diag(pi) - np.outer(pi, pi)) / N
    mu_se = np.sqrt(np.diag(cov)) / binom

    def se(grad):
        g = np.asarray(grad, dtype=float)
        return float(math.sqrt(max(g @ cov @ g, 0.0)))

    pair_sum = mu[3] + mu[2]
    gap = mu[1] ** 2 - mu[2] * mu[0]
    return FkgEstimate(
        N=N,
        counts=tuple(int(c) for c in counts),
        mu=tuple(float(m) for m in mu),
        mu_se=tuple(float(s) for s in mu_se),
        a_hat=float(mu[3] - 0.125),
        a_se=float(mu_se[3]),
        pair_sum=float(pair_sum),
        pair_sum_se=se([0, 0, 1 / 3, 1]),
        gap=float(gap),
        gap_se=se([-mu[2], 2 * mu[1] / 3, -mu[0] / 3, 0]),
        identity=float(np.sum(binom * mu)),
    )


# -- scaling ----------------------------------------------------------------------

SCALING_COLUMNS = ("d", "mean_fragile_fraction", "mean_disagreement_fraction", "mean_max_drift", "margin")


@dataclass(frozen=True, eq=False)
class ScalingTable:
    n: int
    p: float
    d_list: tuple[int, ...]
    margin_c: float
    fragile: np.ndarray       # (len(d_list), trials) fragile count / (C(n,2) p)
    disagreement: np.ndarray  # same normalization
    max_drift: np.ndarray
    margins: tuple[float, ...]

    @property
    def slope(self) -> float:
        """Least-squares slope of log mean fragile fraction against log d."""
        return float(np.polyfit(np.log(self.d_list), np.log(self.fragile.mean(axis=1)), 1)[0])

    def rows(self):
        return [
            (d, float(fr.mean()), float(ds.mean()), float(md.mean()), float(m))
            for d, fr, ds, md, m in zip(self.d_list, self.fragile, self.disagreement, self.max_drift, self.margins)
        ]

    def to_csv(self) -> str:
        return to_csv(SCALING_COLUMNS, self.rows())


def _scaling_trial(rng, k, n, p, d_list, margin_c, base_seed):
    # H is shared across dimensions for paired comparisons.
    H = sample_er(stream(base_seed, "scaling-H", k), n, p)
    edge_pairs = math.comb(n, 2) * p
    out = []
    for d in d_list:
        cfg = CouplingConfig(n, d, p, margin_c=margin_c)
        res = couple(stream(base_seed, "scaling-V", k, d), H, cfg)
        out.append((len(res.fragile) / edge_pairs, len(res.disagreements) / edge_pairs,
                    drift_summary(res)["max"], res.margin))
    return out


def run_scaling(seed: int, n: int, p: float, d_list, trials: int, margin_c: float = 1.0,
                workers: int = 1) -> ScalingTable:
    """Fragile and disagreement counts (per expected edge) and max drift across ``d``."""
    d_list = tuple(int(d) for d in d_list)
    if any(d < max(n * p, math.log(n)) for d in d_list):
        warnings.warn("some d are below max(np, log n); the scaling regime is not reached", RuntimeWarning)
    res = run_trials(_scaling_trial, seed, "scaling", trials, workers, with_index=True,
                     n=n, p=p, d_list=d_list, margin_c=margin_c, base_seed=seed)
    arr = np.array(res)  # (trials, len(d_list), 4)
    return ScalingTable(n, p, d_list, margin_c, arr[:, :, 0].T, arr[:, :, 1].T, arr[:, :, 2].T,
                        tuple(float(m) for m in arr[0, :, 3]))


def calibrate_margin_c(seed: int, n: int, p: float, d_list, trials: int, workers: int = 1) -> float:
    """Smallest ``c`` covering the max drift of every calibration run, over ``d_list``."""
    d_list = tuple(int(d) for d in d_list)
    res = run_trials(_drift_job, seed, "margin-calibration", len(d_list) * trials, workers, with_index=True,
                     n=n, p=p, d_list=d_list)
    return float(max(res))


def _drift_job(rng, k, n, p, d_list):
    d = d_list[k % len(d_list)]
    cfg = CouplingConfig(n, d, p, margin="observed")
    r_h, r_v = rng.spawn(2)
    out = couple(r_v, sample_er(r_h, n, p), cfg)
    return out.margin / margin_unit(n, p, d)


# -- ROC ---------------------------------------------------------------------------

ROC_COLUMNS = ("decider", "adversary", "n", "p", "d", "epsilon", "trials", "tp", "fn", "tn", "fp", "accuracy")


@dataclass(frozen=True)
class RocTable:
    decider: str
    adversary: str
    n: int
    p: float
    d: int
    epsilon: float
    tp: int
    fn: int
    tn: int
    fp: int
    labels: tuple[str, ...] = field(default=(), repr=False)

    @property
    def trials(self) -> int:
        return self.tp + self.fn + self.tn + self.fp

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.trials if self.trials else math.nan

    def row(self):
        return (self.decider, self.adversary, self.n, self.p, self.d, self.epsilon, self.trials,
                self.tp, self.fn, self.tn, self.fp, self.accuracy)

    def to_csv(self) -> str:
        return to_csv(ROC_COLUMNS, [self.row()])


DECIDERS = ("witness", "triangle", "spectral")


def _roc_trial(rng, k, decider, adversary, n, p, d, epsilon, threshold, calibration, margin_c, iters, half):
    hypothesis = "RGG" if k < half else "NULL"
    r_graph, r_adv, r_dec = rng.spawn(3)
    if hypothesis == "RGG":
        G = Graph(sample_rgg_gram(r_graph, n, d) >= law_for(d, p).tau)
    else:
        G = sample_er(r_graph, n, p)
    G = apply_adversary(adversary, r_adv, G, AdversaryContext(n, p, d, epsilon, hypothesis, margin_c))
    if decider == "witness":
        dec = decide_witness(G, n, p, d, calibration, rng=r_dec, iters=iters)
    elif decider == "triangle":
        dec = decide_triangle(G, n, p, d, threshold=threshold)
    else:
        dec = decide_spectral(G, n, p, d, threshold=threshold)
    return hypothesis, dec.label


def run_roc(seed: int, decider: str, adversary: str, n: int, p: float, d: int, epsilon: float, trials: int,
            workers: int = 1, calibration: Calibration | None = None, margin_c: float = 1.0,
            iters: int = 200, triangle_trials: int = 50) -> RocTable:
    """``trials // 2`` geometric and ``trials - trials // 2`` null samples, adversary on both sides."""
    if decider not in DECIDERS:
        raise DomainError(f"unknown decider {decider!r}; choose from {DECIDERS}")
    if decider == "witness" and calibration is None:
        raise DomainError("the witness decider needs a calibration")
    threshold = None
    if decider == "triangle":
        threshold = triangle_threshold(n, p, d, triangle_trials, seed)
    elif decider == "spectral":
        threshold = spectral_threshold(n, p, d)
    half = trials // 2
    res = run_trials(_roc_trial, seed, f"roc-{decider}-{adversary}", trials, workers, with_index=True,
                     decider=decider, adversary=adversary, n=n, p=p, d=d, epsilon=epsilon,
                     threshold=threshold, calibration=calibration, margin_c=margin_c, iters=iters, half=half)
    tp = sum(h == "RGG" and lab == "RGG" for h, lab in res)
    fn = sum(h == "RGG" and lab == "NULL" for h, lab in res)
    tn = sum(h == "NULL" and lab == "NULL" for h, lab in res)
    fp = sum(h == "NULL" and lab == "RGG" for h, lab in res)
    return RocTable(decider, adversary, n, p, d, epsilon, tp, fn, tn, fp, tuple(lab for _, lab in res))
