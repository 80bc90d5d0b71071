import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rggcoupling.coupling import (
    CouplingConfig,
    couple,
    couple_er,
    dominance_triple,
    drift_summary,
    fit_margin_constant,
    margin_unit,
    realize_rgg,
    sample_embedding,
    sample_er,
    sample_rgg,
    sample_rgg_gram,
    sweep,
    sweep_reference,
    uniformity_report,
)
from rggcoupling.errors import DomainError
from rggcoupling.graphs import Graph, LatentEmbedding
from rggcoupling.sphere_law import Interval, law_for, sample_sphere
from rggcoupling.streams import stream


def directions(seed, d, k=3):
    return sample_sphere(np.random.default_rng(seed), d, k)


# -- samplers ------------------------------------------------------------------

def test_sample_er_extremes_and_count():
    rng = np.random.default_rng(0)
    assert sample_er(rng, 10, 0.0) == Graph.empty(10)
    assert sample_er(rng, 10, 1.0) == Graph.complete(10)
    G = sample_er(rng, 200, 0.1)
    N = math.comb(200, 2)
    assert abs(G.n_edges - N * 0.1) <= 4 * math.sqrt(N * 0.1 * 0.9)


def test_sample_rgg_edge_frequency_and_pairwise_independence():
    d, p, n, trials = 6, 0.2, 4, 10**4
    law = law_for(d, p)
    rng = np.random.default_rng(1)
    V = sample_sphere(rng, d, n * trials).reshape(trials, n, d)
    g01 = np.einsum("td,td->t", V[:, 0], V[:, 1]) >= law.tau
    g12 = np.einsum("td,td->t", V[:, 1], V[:, 2]) >= law.tau
    assert abs(g01.mean() - p) <= 4 * math.sqrt(p * (1 - p) / trials)
    cov = np.mean(g01 & g12) - g01.mean() * g12.mean()
    assert abs(cov) <= 4 * p * (1 - p) / math.sqrt(trials)


def test_sample_rgg_d3_edge_probability():
    hits = [sample_rgg(stream(3, "d3", k), 2, 3, 0.25)[0].n_edges for k in range(4000)]
    assert abs(np.mean(hits) - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / 4000)


def test_realize_rgg_examples():
    law = law_for(5, 0.1)
    v = sample_sphere(np.random.default_rng(2), 5)
    assert realize_rgg(LatentEmbedding(np.tile(v, (4, 1))), law) == Graph.complete(4)
    assert realize_rgg(LatentEmbedding(np.eye(5)), law) == Graph.empty(5)
    G, emb = sample_rgg(np.random.default_rng(3), 30, 5, 0.1)
    assert realize_rgg(emb, law) == G
    with pytest.raises(DomainError):
        realize_rgg(emb, law_for(6, 0.1))


def test_bartlett_gram_matches_direct_sampling():
    n, d = 40, 200
    law = law_for(d, 0.1)
    iu = np.triu_indices(n, 1)
    G = sample_rgg_gram(np.random.default_rng(4), n, d)
    assert np.allclose(np.diag(G), 1.0) and np.allclose(G, G.T)
    # Off-diagonal entries within one Gram are dependent; pool one pair per draw.
    vals = [sample_rgg_gram(stream(4, "bart", k), 12, 60)[3, 7] for k in range(3000)]
    assert stats.kstest(vals, law_for(60, 0.1).cdf).pvalue > 1e-3
    # eigenvalue spectrum agrees in distribution with the direct sampler
    top_b = [np.linalg.eigvalsh(sample_rgg_gram(stream(5, "b", k), n, d))[-1] for k in range(200)]
    top_d = []
    for k in range(200):
        rows = sample_sphere(stream(5, "direct", k), d, n)
        top_d.append(np.linalg.eigvalsh(rows @ rows.T)[-1])
    assert stats.ks_2samp(top_b, top_d).pvalue > 1e-3
    assert law.tau > 0 and G[iu].size == n * (n - 1) // 2


# -- the sweep -------------------------------------------------------------------

@pytest.mark.parametrize("n,d,p", [(25, 3, 0.25), (40, 20, 0.1), (70, 500, 0.05), (33, 64, 0.5)])
def test_fast_sweep_matches_reference(n, d, p):
    law = law_for(d, p)
    rng = np.random.default_rng(n + d)
    start = sample_sphere(rng, d, n)
    H = sample_er(rng, n, p).adj
    fast = sweep(law, start, H, block=7)
    ref = sweep_reference(law, start, H)
    assert np.allclose(fast.final, ref.final, atol=1e-11)
    iu = np.triu_indices(n, 1)
    assert np.allclose(fast.at_flip[iu], ref.at_flip[iu], atol=1e-11)
    assert np.array_equal(fast.flipped, ref.flipped)


def test_fast_interval_sweep_matches_reference():
    n, d, p = 50, 400, 0.1
    law = law_for(d, p)
    iv = Interval(law.tau - 0.03, law.tau + 0.025)
    rng = np.random.default_rng(9)
    start = sample_sphere(rng, d, n)
    bits = sample_er(rng, n, 0.5).adj
    fast = sweep(law, start, bits, iv, block=8)
    ref = sweep_reference(law, start, bits, iv)
    assert np.allclose(fast.final, ref.final, atol=1e-11)
    assert np.array_equal(fast.flipped, ref.flipped)
    assert np.array_equal(np.triu(fast.in_interval, 1), np.triu(ref.in_interval, 1))


def test_block_size_does_not_change_result():
    law = law_for(100, 0.1)
    rng = np.random.default_rng(10)
    start = sample_sphere(rng, 100, 60)
    H = sample_er(rng, 60, 0.1).adj
    a = sweep(law, start, H, block=1)
    b = sweep(law, start, H, block=32)
    assert np.allclose(a.final, b.final, atol=1e-12)
    assert np.array_equal(a.flipped, b.flipped)


# -- couple ----------------------------------------------------------------------

def test_couple_trivial_sizes():
    cfg1 = CouplingConfig(1, 8, 0.1)
    out = couple(np.random.default_rng(0), Graph.empty(1), cfg1)
    assert out.embedding.n == 1 and out.realized == Graph.empty(1)
    assert drift_summary(out)["max"] == 0.0
    law = law_for(8, 0.1)
    for bit in (0, 1):
        H = Graph.from_edges(2, [(0, 1)] if bit else [])
        out = couple(np.random.default_rng(bit), H, CouplingConfig(2, 8, 0.1))
        assert int(out.embedding.gram()[0, 1] >= law.tau) == bit
        assert out.realized == H
        assert drift_summary(out)["max"] == 0.0


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), d=st.sampled_from([3, 10, 128, 2048]), p=st.sampled_from([0.05, 0.2, 0.5]),
       seed=st.integers(0, 2**32 - 1))
def test_couple_invariants(n, d, p, seed):
    cfg = CouplingConfig(n, d, p, margin="observed")
    out = couple_er(np.random.default_rng(seed), cfg)
    law = cfg.law
    iu = np.triu_indices(n, 1)
    # unit columns after all flips
    assert np.max(np.abs(np.linalg.norm(out.embedding.rows, axis=1) - 1)) <= 1e-7
    # agreement with H at flip time, exactly
    assert np.array_equal(out.at_flip[iu] >= law.tau, out.input.adj[iu])
    # with the observed margin every disagreement is fragile
    assert out.disagreements_in_fragile()
    assert out.realized == Graph(out.embedding.gram() >= law.tau)


def test_couple_is_deterministic():
    cfg = CouplingConfig(60, 256, 0.1)
    a = couple_er(stream(7, "det"), cfg)
    b = couple_er(stream(7, "det"), cfg)
    assert a.embedding.to_bytes() == b.embedding.to_bytes()
    assert np.array_equal(a.fragile, b.fragile)


def test_coupled_embedding_is_uniform():
    n, d, p = 300, 1024, 0.05
    cfg = CouplingConfig(n, d, p)
    out = couple_er(stream(11, "unif"), cfg)
    assert uniformity_report(out.embedding, cfg.law, directions(1, d)).passed
    emb = sample_embedding(np.random.default_rng(12), n, d)
    assert uniformity_report(emb, cfg.law, directions(2, d)).passed
    v = sample_sphere(np.random.default_rng(13), d)
    aligned = LatentEmbedding(np.tile(v, (n, 1)))
    assert not uniformity_report(aligned, cfg.law, directions(3, d)).passed


def test_uniformity_report_validation():
    emb = sample_embedding(np.random.default_rng(0), 10, 5)
    with pytest.raises(DomainError):
        uniformity_report(emb, law_for(5, 0.1), np.ones((1, 4)))


def test_drift_requires_recording():
    cfg = CouplingConfig(10, 16, 0.1, record_drift=False)
    out = couple_er(np.random.default_rng(0), cfg)
    assert out.drift is None
    with pytest.raises(DomainError):
        drift_summary(out)
    with pytest.raises(DomainError):
        CouplingConfig(10, 16, 0.1, margin="observed", record_drift=False)


def test_config_validation():
    for bad in ({"d": 2}, {"p": 0.7}, {"n": 0}, {"margin": -1.0}, {"margin": "wide"}, {"margin_c": 0.0}):
        kw = {"n": 5, "d": 8, "p": 0.1} | bad
        with pytest.raises(DomainError):
            CouplingConfig(**kw)


def test_drift_decreases_with_dimension_paired():
    n, p, trials = 150, 0.05, 10
    wins = 0
    for k in range(trials):
        H = sample_er(stream(21, "H", k), n, p)
        lo = couple(stream(21, "V", k, 2048), H, CouplingConfig(n, 2048, p))
        hi = couple(stream(21, "V", k, 8192), H, CouplingConfig(n, 8192, p))
        wins += drift_summary(hi)["max"] < drift_summary(lo)["max"]
    assert wins >= 0.9 * trials


def test_margin_constant_fit():
    settings_ = [(100, 0.1, 512), (200, 0.05, 1024)]
    drifts = [0.5 * margin_unit(*s) for s in settings_]
    assert fit_margin_constant(drifts, settings_) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        fit_margin_constant([], [])


# -- dominance --------------------------------------------------------------------

def test_dominance_extremes():
    big = dominance_triple(np.random.default_rng(0), CouplingConfig(30, 16, 0.1, margin=3.0))
    assert big.G_plus == Graph.complete(30) and big.h_in_plus
    zero = dominance_triple(np.random.default_rng(0), CouplingConfig(30, 16, 0.1, margin=0.0))
    assert zero.G_minus == zero.G_plus == zero.output.realized


def test_dominance_with_observed_margin_holds():
    dom = dominance_triple(stream(5, "dom"), CouplingConfig(120, 2048, 0.05, margin="observed"))
    assert dom.holds
    assert dom.G_minus.issubgraph(dom.G_plus)
