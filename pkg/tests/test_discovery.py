import numpy as np
import pytest

from causal_bench.discovery import (
    CandidateParents,
    DiscoveryConfig,
    das_candidates,
    nogam_order,
    random_baseline,
    resit_order,
    score_order,
    scoresort_order,
)
from causal_bench.errors import ParameterError
from causal_bench.graphs import CausalOrder, Dag, GraphConfig, sample_graph
from causal_bench.metrics import fnr_order
from causal_bench.scm import ScenarioSpec, generate, standardize


def linear_chain(d, n, seed):
    r = np.random.default_rng(seed)
    x = np.empty((n, d))
    x[:, 0] = r.standard_normal(n)
    for k in range(1, d):
        x[:, k] = x[:, k - 1] + r.standard_normal(n)
    return x


def chain_cov(d):
    # X_k = X_{k-1} + U_k with unit noise: Cov(X_i, X_j) = min(i, j) + 1
    idx = np.arange(d)
    return np.minimum.outer(idx, idx) + 1.0


def precision_peel(cov):
    """Order implied by repeatedly removing argmin diag(inverse covariance)."""
    remaining = list(range(len(cov)))
    leaves = []
    while len(remaining) > 1:
        prec = np.linalg.inv(cov[np.ix_(remaining, remaining)])
        leaves.append(remaining.pop(int(np.argmin(np.diag(prec)))))
    return tuple(remaining + leaves[::-1])


def two_node(kind, n, seed):
    """Returns data with the columns swapped on odd seeds, plus the true leaf index."""
    x = generate(Dag.from_edges(2, [(0, 1)]), ScenarioSpec(kind), n, seed).data
    return (x[:, ::-1], 0) if seed % 2 else (x, 1)


def random_fnr(truth, seed, draws=50):
    return np.mean([fnr_order(random_baseline(truth.d, np.random.default_rng([seed, k]))[0], truth)
                    for k in range(draws)])


class TestScoreSort:
    def test_linear_chain(self):
        hits = sum(scoresort_order(linear_chain(2, 2000, s)).perm == (0, 1) for s in range(20))
        assert hits >= 18

    def test_single_column(self):
        assert scoresort_order(np.random.default_rng(0).standard_normal((50, 1))).perm == (0,)

    def test_too_few_rows(self):
        with pytest.raises(ParameterError):
            scoresort_order(np.ones((5, 2)))

    def test_population_oracle_is_sortable(self):
        for d in (2, 3, 4):
            assert precision_peel(chain_cov(d)) == tuple(range(d))

    @pytest.mark.parametrize("d", [3, 4])
    def test_agrees_with_precision_oracle(self, d):
        oracle = precision_peel(chain_cov(d))
        agree = sum(scoresort_order(linear_chain(d, 2000, s)).perm == oracle for s in range(10))
        assert agree >= 8

    @pytest.mark.slow
    def test_er10_beats_random(self):
        est, rnd = [], []
        for s in range(10):
            g = sample_graph(GraphConfig("ER", 10, "sparse", seed=s).resolved())
            est.append(fnr_order(scoresort_order(generate(g, ScenarioSpec("vanilla"), 1000, s).data), g))
            rnd.append(random_fnr(g, s))
        assert np.mean(rnd) - np.mean(est) >= 0.2


class TestScore:
    def test_fully_connected_d4(self):
        fc = CausalOrder((0, 1, 2, 3)).full_dag()
        ok = sum(fnr_order(score_order(generate(fc, ScenarioSpec("vanilla"), 1000, s).data), fc) == 0
                 for s in range(20))
        assert ok >= 15

    def test_column_permutation_equivariance(self):
        g = Dag.from_edges(3, [(0, 1), (1, 2)])
        x = generate(g, ScenarioSpec("vanilla"), 400, 3).data
        perm = [2, 0, 1]
        base = score_order(x).perm
        moved = score_order(x[:, perm]).perm
        assert tuple(perm[k] for k in moved) == base

    def test_deterministic(self):
        x = generate(Dag.from_edges(3, [(0, 2)]), ScenarioSpec("vanilla"), 300, 1).data
        assert score_order(x) == score_order(x.copy())


class TestNoGAM:
    def test_rejects_single_fold(self):
        with pytest.raises(ParameterError):
            nogam_order(np.random.default_rng(0).standard_normal((100, 2)), folds=1)

    def test_lingam_chain_beats_random(self):
        chain = Dag.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        est = [fnr_order(nogam_order(standardize(generate(chain, ScenarioSpec("lingam"), 1000, s)).data), chain)
               for s in range(10)]
        rnd = [random_fnr(chain, s) for s in range(10)]
        assert np.mean(rnd) - np.mean(est) >= 0.15

    def test_pnl_two_node(self):
        hits = 0
        for s in range(20):
            x, leaf = two_node("pnl", 2000, s)
            hits += nogam_order(x).perm[-1] == leaf
        assert hits >= 14

    def test_returns_permutation(self):
        x = np.random.default_rng(4).standard_normal((200, 4))
        assert sorted(nogam_order(x).perm) == [0, 1, 2, 3]


class TestRESIT:
    def test_needs_fifty_rows(self):
        with pytest.raises(ParameterError):
            resit_order(np.random.default_rng(0).standard_normal((49, 2)))

    def test_vanilla_two_node(self):
        hits = 0
        for s in range(20):
            x, leaf = two_node("vanilla", 1000, s)
            hits += resit_order(x).perm[-1] == leaf
        assert hits >= 16

    def test_independent_columns(self):
        x = np.random.default_rng(2).standard_normal((300, 3))
        order = resit_order(x)
        assert sorted(order.perm) == [0, 1, 2]
        assert fnr_order(order, Dag.empty(3)) == 0.0

    def test_pnl_two_node(self):
        hits = 0
        for s in range(20):
            x, leaf = two_node("pnl", 1000, s)
            hits += resit_order(x).perm[-1] == leaf
        assert hits >= 14


class TestDAS:
    def test_empty_graph(self):
        order = CausalOrder((0, 1, 2))
        clean = 0
        for s in range(20):
            x = generate(Dag.empty(3), ScenarioSpec("vanilla"), 1000, s).data
            clean += all(not c for c in das_candidates(x, order).sets)
        assert clean >= 16

    def test_chain_parent_found(self):
        order = CausalOrder((0, 1))
        hits = 0
        for s in range(20):
            x = generate(Dag.from_edges(2, [(0, 1)]), ScenarioSpec("vanilla"), 1000, s).data
            hits += 0 in das_candidates(x, order).sets[1]
        assert hits >= 18

    def test_respects_order(self):
        x = generate(Dag.from_edges(4, [(0, 1), (1, 2), (0, 3)]), ScenarioSpec("vanilla"), 400, 0).data
        for perm in [(0, 1, 2, 3), (3, 2, 1, 0), (2, 0, 3, 1)]:
            order = CausalOrder(perm)
            assert das_candidates(x, order).respects(order)

    def test_bad_significance(self):
        with pytest.raises(ParameterError):
            das_candidates(np.zeros((20, 2)) + np.arange(20)[:, None], CausalOrder((0, 1)), 1.5)

    def test_margin_zero_is_more_permissive(self):
        x = generate(Dag.from_edges(3, [(0, 2)]), ScenarioSpec("vanilla"), 500, 5).data
        order = CausalOrder((0, 1, 2))
        loose = das_candidates(x, order, config=DiscoveryConfig(das_margin=0.0))
        strict = das_candidates(x, order)
        assert all(s <= t for s, t in zip(strict.sets, loose.sets))


class TestCandidateParents:
    def test_all_predecessors(self):
        c = CandidateParents.all_predecessors(CausalOrder((2, 0, 1)))
        assert c.sets == (frozenset({2}), frozenset({0, 2}), frozenset())

    def test_respects(self):
        order = CausalOrder((0, 1))
        assert CandidateParents((frozenset(), frozenset({0}))).respects(order)
        assert not CandidateParents((frozenset({1}), frozenset())).respects(order)


class TestRandomBaseline:
    def test_edge_frequency(self):
        rng = np.random.default_rng(0)
        freq = np.mean([random_baseline(2, rng)[1].n_edges for _ in range(1000)])
        assert abs(freq - 0.5) <= 0.05

    def test_expected_edge_count(self):
        rng = np.random.default_rng(1)
        mean = np.mean([random_baseline(10, rng)[1].n_edges for _ in range(1000)])
        assert abs(mean - 22.5) <= 0.05 * 22.5

    def test_respects_order(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            order, dag = random_baseline(6, rng)
            pos = order.positions()
            assert all(pos[i] < pos[j] for i, j in dag.edges())

    def test_rejects_zero_nodes(self):
        with pytest.raises(ParameterError):
            random_baseline(0, np.random.default_rng(0))
