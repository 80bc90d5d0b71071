"""Multi-round edge flipping with shrinking intervals around ``tau``.

Round 0 is the plain coupling of ``H^0 ~ G(n, p)``.  Round ``t >= 1`` draws a
fresh ``H^t ~ G(n, 1/2)`` and repeats the lexicographic sweep with interval
flips on ``[tau - L_t, tau + U_t]``: only pairs whose inner product sits in the
interval at flip time are touched (the defect set ``F_t``), and they are
re-oriented by the fresh bits.  Each interval is balanced, i.e. half of its
mass lies below ``tau``, so fair coins are the right bits.

Interval lengths follow
``U_{t+1} = C I_t max(log(n)^{3/4} sqrt(n p I_t) / d^{1/4}, log(n) / sqrt(d))``
with ``I_t = L_t + U_t``; ``L_{t+1}`` is then solved from the balance condition.
The first interval ends at ``tau + margin`` with the coupling margin.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .coupling import (
    CouplingConfig,
    CouplingOutput,
    SweepResult,
    finish,
    margin_formula,
    sample_er,
    sweep,
)
from .errors import DomainError, NumericalError
from .graphs import Graph, LatentEmbedding
from .graphstats import signed_triangles
from .sphere_law import Interval, SphericalLaw, law_for, sample_sphere

REPORT_COLUMNS = ("t", "defect_count", "interval_lo", "interval_hi", "flips_applied")


@dataclass(frozen=True)
class IntervalSchedule:
    law: SphericalLaw
    rounds: tuple[Interval, ...]
    balance_tol: float = 1e-9
    C: float = 1.0
    margin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        for t, iv in enumerate(self.rounds, start=1):
            iv.check(self.law)
            if iv.is_empty:
                continue
            q = self.law.q_interval(iv)
            if abs(q - 0.5) > self.balance_tol:
                raise NumericalError(f"round {t} interval is unbalanced: P(X >= tau | X in iv) = {q}")

    @property
    def T(self) -> int:
        return len(self.rounds)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([iv.length for iv in self.rounds])

    @property
    def masses(self) -> np.ndarray:
        return np.array([self.law.mass(iv.lo, iv.hi) for iv in self.rounds])

    @classmethod
    def empty(cls, law: SphericalLaw, T: int) -> IntervalSchedule:
        """``T`` rounds that never touch any pair."""
        return cls(law, tuple(Interval(law.tau, law.tau) for _ in range(T)))


def _solve(f, hi: float, what: str) -> float:
    if f(hi) < 0:
        raise NumericalError(f"cannot balance interval: {what} side lacks mass")
    if f(0.0) >= 0:
        return 0.0
    return float(optimize.brentq(f, 0.0, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500))


def balance_upper(law: SphericalLaw, L: float) -> float:
    """``U`` with ``P(tau <= X <= tau + U) = P(tau - L <= X <= tau)``."""
    tau = law.tau
    target = law.mass(max(tau - L, -1.0), tau)
    return _solve(lambda u: law.mass(tau, min(tau + u, 1.0)) - target, 1.0 - tau, "upper")


def balance_lower(law: SphericalLaw, U: float) -> float:
    """``L`` with ``P(tau - L <= X <= tau) = P(tau <= X <= tau + U)``."""
    tau = law.tau
    target = law.mass(tau, min(tau + U, 1.0))
    return _solve(lambda l: law.mass(max(tau - l, -1.0), tau) - target, 1.0 + tau, "lower")


def next_upper(I: float, n: int, p: float, d: int, C: float, log_power: float = 0.75) -> float:
    logn = math.log(n)
    return C * I * max(logn**log_power * math.sqrt(n * p * I) / d**0.25, logn / math.sqrt(d))


def build_schedule(
    law: SphericalLaw,
    n: int,
    C: float = 1.0,
    T: int | None = None,
    margin: float | None = None,
    margin_c: float = 1.0,
    t_max: int = 12,
    log_power: float = 0.75,
    balance_tol: float = 1e-9,
) -> IntervalSchedule:
    """Interval schedule; with ``T=None`` rounds continue while the interval
    mass is at least ``1/n^3``, up to ``t_max`` rounds."""
    if not C > 0:
        raise DomainError("C must be positive")
    if T is not None and T < 1:
        raise DomainError("T must be at least 1")
    if margin is None:
        margin = margin_formula(n, law.p, law.d, margin_c)
    tau = law.tau
    # The mass above tau is only p, so the first interval is anchored on its
    # upper end (tau + margin) and the lower end is solved from the balance.
    U = min(margin, 1.0 - tau)
    L = balance_lower(law, U)
    rounds: list[Interval] = []
    limit = T if T is not None else t_max
    stop_mass = 1.0 / n**3
    while len(rounds) < limit:
        iv = Interval(tau - L, min(tau + U, 1.0))
        m = law.mass(iv.lo, iv.hi)
        if m < law.cdf_tol:
            raise NumericalError(f"round {len(rounds) + 1} interval mass {m:.3g} is below cdf_tol")
        if T is None and m < stop_mass:
            break
        rounds.append(iv)
        U = next_upper(iv.length, n, law.p, law.d, C, log_power)
        L = balance_lower(law, U)
    if not rounds:
        raise NumericalError("first interval already carries less than 1/n^3 mass")
    lengths = [iv.length for iv in rounds]
    if any(b >= a for a, b in itertools.pairwise(lengths)):
        raise NumericalError(f"interval lengths do not shrink: {lengths}; lower C")
    return IntervalSchedule(law, tuple(rounds), balance_tol, C, margin)


@dataclass(frozen=True, eq=False)
class RoundReport:
    t: int
    defect_pairs: np.ndarray  # (k, 2), i < j
    interval: Interval
    flips_applied: int

    @property
    def defect_count(self) -> int:
        return len(self.defect_pairs)

    def row(self) -> tuple:
        return (self.t, self.defect_count, repr(self.interval.lo), repr(self.interval.hi), self.flips_applied)


@dataclass(frozen=True, eq=False)
class RoundData:
    start: np.ndarray
    bits: np.ndarray
    result: SweepResult


@dataclass(frozen=True, eq=False)
class MultiRoundResult:
    embedding: LatentEmbedding
    graph: Graph
    reports: list[RoundReport]
    base: CouplingOutput
    rounds: list[RoundData] = field(default_factory=list)


def _pairs(mask: np.ndarray) -> np.ndarray:
    i, j = np.nonzero(np.triu(mask, 1))
    return np.column_stack([i, j]).astype(np.int64)


def multi_round_couple(
    rng: np.random.Generator,
    n: int,
    p: float,
    d: int,
    schedule: IntervalSchedule,
    margin_c: float = 1.0,
    reuse_h0: bool = False,
    keep_rounds: bool = False,
) -> MultiRoundResult:
    """Coupling followed by ``schedule.T`` interval rounds.

    With ``reuse_h0`` every round uses ``H^0`` again instead of fresh bits;
    this breaks the independence the construction relies on and exists only
    as a negative control.
    """
    law = law_for(d, p)
    if schedule.law != law:
        raise DomainError("schedule was built for a different law")
    streams = rng.spawn(2 + schedule.T)
    cfg = CouplingConfig(n, d, p, margin_c=margin_c)
    H0 = sample_er(streams[0], n, p)
    start = sample_sphere(streams[1], d, n)
    res0 = sweep(law, start, H0.adj)
    base = finish(H0, law, res0, cfg, int(res0.flipped.sum()))
    current = res0
    reports: list[RoundReport] = []
    kept: list[RoundData] = []
    for t, iv in enumerate(schedule.rounds, start=1):
        if reuse_h0:
            bits = H0.adj
        else:
            bits = sample_er(streams[1 + t], n, 0.5).adj
        prev = current.final
        current = sweep(law, prev, bits, iv)
        reports.append(RoundReport(t, _pairs(current.in_interval), iv, int(current.flipped.sum())))
        if keep_rounds:
            kept.append(RoundData(prev, bits, current))
    emb = LatentEmbedding(current.final)
    return MultiRoundResult(emb, Graph(current.gram >= law.tau), reports, base, kept)


def reports_to_csv(reports: list[RoundReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def defect_overlaps(reports: list[RoundReport]) -> list[dict[str, float]]:
    """``|F_t & F_{t+1}| / |F_t|`` and ``/ |F_{t+1}|`` for consecutive rounds."""
    out = []
    for a, b in itertools.pairwise(reports):
        sa = {tuple(e) for e in a.defect_pairs.tolist()}
        sb = {tuple(e) for e in b.defect_pairs.tolist()}
        both = len(sa & sb)
        out.append({
            "t": a.t,
            "forward": both / len(sa) if sa else math.nan,
            "backward": both / len(sb) if sb else math.nan,
        })
    return out


AUDIT_STATISTICS = ("edge_count", "signed_triangles", "degree_variance")


def graph_statistics(G: Graph, p: float) -> dict[str, float]:
    return {
        "edge_count": float(G.n_edges),
        "signed_triangles": signed_triangles(G, p),
        "degree_variance": float(np.var(G.degrees())),
    }


@dataclass(frozen=True)
class AuditReport:
    statistics: dict[str, float]
    pvalues: dict[str, float]
    alpha: float

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.pvalues.items() if v < self.alpha]

    @property
    def passed(self) -> bool:
        return not self.failed


def distribution_audit(outputs: list[Graph], reference: list[Graph], p: float, alpha: float = 1e-3) -> AuditReport:
    """Two-sample KS comparison of edge counts, signed triangles and degree variances."""
    if not outputs or not reference:
        raise DomainError("both samples must be nonempty")
    if {G.n for G in outputs} != {G.n for G in reference}:
        raise DomainError("samples have different vertex counts")
    a = [graph_statistics(G, p) for G in outputs]
    b = [graph_statistics(G, p) for G in reference]
    st, pv = {}, {}
    for key in AUDIT_STATISTICS:
        r = stats.ks_2samp([x[key] for x in a], [x[key] for x in b])
        st[key] = float(r.statistic)
        pv[key] = float(r.pvalue)
    return AuditReport(st, pv, alpha)
