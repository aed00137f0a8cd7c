import logging
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iedr.data import user_history
from iedr.diffcore import substream
from iedr.eval import (
    MetricsReport,
    RankedList,
    auc,
    cross_context_cosine,
    disentanglement_report,
    evaluate,
    expected_random_ndcg,
    export_representations,
    linear_probe_accuracy,
    matching_scores,
    ndcg_at_k,
    rank_of_positive,
    read_representations,
    recall_at_k,
    top_k_kendall,
    user_context_grid,
    within_user_residuals,
)
from iedr.experiment import synthetic_config, synthetic_dataset
from iedr.train import IEDRModel, apply_variant

from oracles import auc_oracle, ndcg_oracle, rank_by_counting, recall_oracle, tie_broken_rank


@pytest.fixture(scope="module")
def synth():
    cfg = synthetic_config().replace("encoder", embed_dim=8, hidden_dim=16).replace("factor", hidden_dim=16)
    dataset, truth = synthetic_dataset(cfg, 0)
    return cfg, dataset, truth


def zero_scorer(batch):
    return np.zeros(len(batch))


def zero_model(cfg, vocab_size):
    model = IEDRModel(vocab_size, cfg)
    for p in model.parameters():
        p.data[...] = 0.0
    return model


class TestMetricDefinitions:
    def test_closed_forms(self):
        assert ndcg_at_k(1, 10) == 1.0
        assert ndcg_at_k(3, 10) == 0.5
        assert ndcg_at_k(11, 10) == 0.0
        assert recall_at_k(5, 5) == 1.0 and recall_at_k(6, 5) == 0.0
        assert auc(1.0, np.zeros(99)) == 1.0
        assert auc(0.0, np.zeros(99)) == 0.5
        with pytest.raises(ValueError):
            auc(0.0, [])

    def test_exhaustive_short_lists(self):
        for n in range(1, 9):
            base = np.arange(n, dtype=float)
            perms = permutations(range(n)) if n <= 6 else (np.random.default_rng(n).permutation(n)
                                                           for _ in range(720))
            for p in perms:
                s = base[list(p)]
                for pos in range(n):
                    r = rank_of_positive(s, pos)
                    assert r == rank_by_counting(s, pos)
                    for k in (1, 5, 10):
                        assert ndcg_at_k(r, k) == ndcg_oracle(s, pos, k)
                        assert recall_at_k(r, k) == recall_oracle(s, pos, k)
                    if n > 1:
                        assert auc(s[pos], np.delete(s, pos)) == auc_oracle(s[pos], np.delete(s, pos))

    def test_random_lists_match_oracle(self):
        rng = np.random.default_rng(0)
        ranks, aucs, nd, rc, au = [], [], [], [], []
        for _ in range(1000):
            s = rng.standard_normal(100)
            ranks.append(rank_of_positive(s, 0))
            aucs.append(auc(s[0], s[1:]))
            nd.append(ndcg_oracle(s, 0, 10))
            rc.append(recall_oracle(s, 0, 5))
            au.append(auc_oracle(s[0], s[1:]))
        rep = MetricsReport.from_ranks(ranks, aucs)
        assert abs(rep.ndcg_at_10 - np.mean(nd)) < 1e-12
        assert abs(rep.recall_at_5 - np.mean(rc)) < 1e-12
        assert abs(rep.auc - np.mean(au)) < 1e-12

    def test_tie_policy(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            s = rng.integers(0, 3, 12).astype(float)
            pos = int(rng.integers(12))
            seed = int(rng.integers(10**6))
            perm = np.random.default_rng(seed).permutation(12)
            assert rank_of_positive(s, pos, np.random.default_rng(seed)) == tie_broken_rank(s, pos, perm)

    def test_all_ties_give_uniform_rank(self):
        rng = np.random.default_rng(1)
        ranks = [rank_of_positive(np.zeros(100), 0, rng) for _ in range(20_000)]
        rep = MetricsReport.from_ranks(ranks, [0.5] * len(ranks))
        assert abs(rep.ndcg_at_10 - expected_random_ndcg(10)) < 0.003
        assert abs(expected_random_ndcg(10) - 0.04544) < 1e-4

    def test_ranked_list(self):
        rl = RankedList.build(["a", "b", "c"], [0.1, 0.9, 0.5], positive=2)
        assert rl.keys == ["b", "c", "a"] and rl.rank == 2
        with pytest.raises(ValueError):
            RankedList.build(["a"], [np.nan], 0)

    @given(st.lists(st.integers(1, 100), min_size=1, max_size=50))
    @settings(max_examples=50)
    def test_report_invariants(self, ranks):
        rep = MetricsReport.from_ranks(ranks, np.zeros(len(ranks)))
        assert rep.recall_at_5 <= rep.recall_at_10
        assert rep.ndcg_at_5 <= rep.ndcg_at_10
        assert rep.ndcg_at_5 <= rep.recall_at_5 and rep.ndcg_at_10 <= rep.recall_at_10
        assert all(0 <= v <= 1 for v in (rep.ndcg_at_5, rep.ndcg_at_10, rep.recall_at_10))

    def test_report_csv(self, tmp_path):
        rep = MetricsReport.from_ranks([1, 3], [1.0, 0.5])
        rep.write_csv(tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "ndcg_at_5,ndcg_at_10,recall_at_5,recall_at_10,auc,n"
        assert lines[1].split(",")[-1] == "2"


class TestEvaluate:
    def test_zero_model_is_random(self, synth):
        cfg, dataset, _ = synth
        model = zero_model(cfg, len(dataset.vocab))
        rep = evaluate(model, dataset.test, dataset.catalog, np.random.default_rng(0), 99,
                       user_history(dataset.train))
        assert rep.auc == 0.5
        # one list's NDCG@10 has sd ~0.15; allow four standard errors
        assert abs(rep.ndcg_at_10 - expected_random_ndcg(10)) < 4 * 0.15 / np.sqrt(rep.n)

    def test_oracle_model(self, synth):
        _, dataset, _ = synth
        positives = {(i.user_feats, i.item_feats) for i in dataset.test}

        def oracle(batch):
            out = []
            for u, um, v, vm in zip(batch.user_ids, batch.user_mask, batch.item_ids, batch.item_mask):
                out.append(1.0 if (tuple(u[um]), tuple(v[vm])) in positives else 0.0)
            return np.array(out)

        rep = evaluate(oracle, dataset.test, dataset.catalog, np.random.default_rng(0), 99,
                       user_history(dataset.train))
        assert rep.ndcg_at_10 == 1.0 and rep.auc == 1.0

    def test_deterministic(self, synth):
        cfg, dataset, _ = synth
        model = IEDRModel(len(dataset.vocab), cfg)
        a = evaluate(model, dataset.test, dataset.catalog, substream(3, "test_eval"))
        b = evaluate(model, dataset.test, dataset.catalog, substream(3, "test_eval"))
        assert a == b

    def test_small_catalog_warns_once(self, synth, caplog):
        _, dataset, _ = synth
        with caplog.at_level(logging.WARNING):
            rep = evaluate(zero_scorer, dataset.test[:20], dataset.catalog, np.random.default_rng(0),
                           negatives=10_000)
        assert rep.n == 20
        assert sum("k reduced" in r.message for r in caplog.records) == 1

    def test_empty_and_nonfinite(self, synth):
        _, dataset, _ = synth
        with pytest.raises(ValueError):
            evaluate(zero_scorer, [], dataset.catalog, np.random.default_rng(0))
        with pytest.raises(FloatingPointError):
            evaluate(lambda b: np.full(len(b), np.nan), dataset.test[:2], dataset.catalog,
                     np.random.default_rng(0))


class TestExportAndMatching:
    def test_export(self, synth, tmp_path):
        cfg, dataset, _ = synth
        model = IEDRModel(len(dataset.vocab), cfg)
        rows = export_representations(model, dataset.test[:3], "both", "user", tmp_path / "r.csv")
        assert len(rows) == 6
        d = cfg.encoder.embed_dim
        assert all(len(r) == 3 + d for r in rows)
        back = read_representations(tmp_path / "r.csv")
        assert back == rows
        assert len(export_representations(model, dataset.test[:3], "intrinsic", "item")) == 3
        with pytest.raises(ValueError):
            export_representations(model, dataset.test[:3], "both", "context")

    def test_split_intrinsic_is_context_free(self, synth):
        cfg, dataset, truth = synth
        split = apply_variant(cfg, "Split")
        model = IEDRModel(len(dataset.vocab), split)
        from iedr.data import entity_features
        users, contexts, items = entity_features(dataset.vocab, truth.spec)
        tables = matching_scores(model, users[0], contexts[:2], items[:50])
        np.testing.assert_array_equal(tables[0].intrinsic, tables[1].intrinsic)
        o_in, o_ex = user_context_grid(model, users[:5], contexts[:4], items[0][1])
        assert cross_context_cosine(o_in) == pytest.approx(1.0, abs=1e-12)
        assert cross_context_cosine(o_ex) < 1.0

    def test_zero_model_scores(self, synth):
        cfg, dataset, truth = synth
        from iedr.data import entity_features
        users, contexts, items = entity_features(dataset.vocab, truth.spec)
        model = zero_model(cfg, len(dataset.vocab))
        for t in matching_scores(model, users[0], contexts[:2], items[:10]):
            assert np.all(t.intrinsic == 0) and np.all(t.extrinsic == 0)
            assert len(t.top("intrinsic", 100)) == 10

    def test_untrained_probe_accuracies_indistinguishable(self, synth):
        cfg, dataset, truth = synth
        from iedr.data import entity_features
        users, contexts, items = entity_features(dataset.vocab, truth.spec)
        model = IEDRModel(len(dataset.vocab), cfg)
        o_in, o_ex = user_context_grid(model, users[:100], contexts, items[0][1])
        labels = np.tile(np.arange(len(contexts)), 100)
        d = o_in.shape[-1]
        a_in = linear_probe_accuracy(o_in.reshape(-1, d), labels, np.random.default_rng(0))
        a_ex = linear_probe_accuracy(o_ex.reshape(-1, d), labels, np.random.default_rng(0))
        n = len(labels) // 2
        p = (a_in + a_ex) / 2
        assert abs(a_in - a_ex) < 3 * np.sqrt(2 * p * (1 - p) / n)

    def test_report_fields(self, synth):
        cfg, dataset, truth = synth
        from iedr.cied import ProbeConfig
        from iedr.data import entity_features
        users, contexts, items = entity_features(dataset.vocab, truth.spec)
        model = IEDRModel(len(dataset.vocab), apply_variant(cfg, "Split"))
        rep = disentanglement_report(model, users[:10], contexts[:5], items[0][1], ProbeConfig(epochs=20))
        assert rep.cosine_intrinsic == pytest.approx(1.0)
        # context-free intrinsic factors leave nothing after removing each user's mean
        assert abs(rep.mine_intrinsic) < 1e-3 and abs(rep.club_intrinsic) < 1e-3
        assert set(rep.to_dict()) >= {"mine_intrinsic", "club_extrinsic", "probe_acc_intrinsic"}


class TestAnalysisHelpers:
    def test_kendall(self):
        a = np.arange(10.0)
        assert top_k_kendall(a, a) == pytest.approx(1.0)
        assert top_k_kendall(a, -a) == pytest.approx(-1.0)
        assert top_k_kendall(np.zeros(5), np.zeros(5)) == 1.0

    def test_kendall_top_k_only(self):
        a = np.array([5.0, 4, 3, 2, 1, 0])
        b = np.array([5.0, 4, 3, 0, 1, 2])  # bottom reversed
        assert top_k_kendall(a, b, k=3) == pytest.approx(1.0)

    def test_within_user_residuals(self):
        v = np.random.default_rng(0).standard_normal((4, 3, 2))
        r = within_user_residuals(v)
        np.testing.assert_allclose(r.mean(axis=1), 0, atol=1e-12)
        np.testing.assert_allclose(r * np.sqrt(np.mean(v ** 2)), v - v.mean(axis=1, keepdims=True))
        assert np.all(within_user_residuals(np.zeros((2, 2, 2))) == 0)

    def test_cosine(self):
        v = np.ones((2, 3, 4))
        assert cross_context_cosine(v) == pytest.approx(1.0)
        w = np.stack([np.eye(2)], 0)
        assert cross_context_cosine(w) == pytest.approx(0.0)

    def test_linear_probe(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 4, 400)
        assert linear_probe_accuracy(np.eye(4)[labels], labels, rng) == 1.0
        assert linear_probe_accuracy(rng.standard_normal((400, 3)), labels, rng) < 0.4
