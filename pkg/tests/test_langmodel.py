import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspectir.errors import AspectIRError
from aspectir.langmodel import (
    RankedList,
    TermDistribution,
    kl_divergence,
    query_likelihood_score,
    rank_by_kl,
    relevance_model_expand,
    restrict_to_collection,
    retrieve_ql,
    smoothed_doc_prob,
)

from conftest import make_index, random_docs
from oracles import bf_cross_entropy, bf_kl, bf_ql_ranking, bf_rm


@pytest.fixture
def pc_tenth():
    # 20 tokens: P(a|C) = P(c|C) = 0.1, d1 = [a, a, b]
    return make_index({"d1": ["a", "a", "b"], "d2": ["c", "c"] + ["x"] * 15})


class TestTermDistribution:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            TermDistribution({"a": 0.5, "b": 0.4})

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            TermDistribution({"a": 1.5, "b": -0.5})

    def test_drops_zero_weights(self):
        d = TermDistribution({"a": 1.0, "b": 0.0})
        assert d.support == {"a"}

    def test_mle(self):
        assert TermDistribution.mle(["a", "b", "a"]).weights == {"a": 2 / 3, "b": 1 / 3}


class TestSmoothedDocProb:
    def test_mle_when_mu_zero(self):
        index = make_index({"d": ["a", "a", "b"]})
        assert smoothed_doc_prob(index, "d", "a", 0) == pytest.approx(2 / 3)

    def test_dirichlet_value(self, pc_tenth):
        assert smoothed_doc_prob(pc_tenth, "d1", "a", 10) == pytest.approx(3 / 13, abs=1e-12)

    def test_absent_term(self, pc_tenth):
        assert smoothed_doc_prob(pc_tenth, "d1", "c", 10) == pytest.approx(1 / 13, abs=1e-12)

    def test_unknown_doc(self, pc_tenth):
        with pytest.raises(KeyError):
            smoothed_doc_prob(pc_tenth, "nope", "a", 10)

    def test_smoothed_lm_sums_to_one(self, pc_tenth):
        total = math.fsum(smoothed_doc_prob(pc_tenth, "d1", w, 7.0) for w in pc_tenth.vocab)
        assert total == pytest.approx(1.0, abs=1e-12)


class TestQueryLikelihood:
    def test_single_term(self):
        index = make_index({"d": ["a", "a", "b"]})
        assert query_likelihood_score(index, "d", ["a"], 0) == pytest.approx(math.log(2 / 3))
        assert query_likelihood_score(index, "d", ["a", "a"], 0) == pytest.approx(2 * math.log(2 / 3))

    def test_absent_term_without_smoothing_is_minus_inf(self):
        index = make_index({"d": ["a"], "e": ["b"]})
        assert query_likelihood_score(index, "d", ["b"], 0) == -math.inf

    def test_empty_query(self):
        with pytest.raises(AspectIRError):
            query_likelihood_score(make_index({"d": ["a"]}), "d", [], 10)

    @settings(max_examples=50, deadline=None)
    @given(
        q1=st.lists(st.sampled_from(["w0", "w1", "w2", "w3", "zz"]), min_size=1, max_size=4),
        q2=st.lists(st.sampled_from(["w0", "w1", "w2", "w3", "zz"]), min_size=1, max_size=4),
    )
    def test_additive_over_query_multisets(self, q1, q2):
        index = make_index(random_docs(random.Random(5), 6, vocab_size=4))
        for d in index.doc_ids:
            combined = query_likelihood_score(index, d, q1 + q2, 100)
            split = query_likelihood_score(index, d, q1, 100) + query_likelihood_score(index, d, q2, 100)
            assert combined == pytest.approx(split, rel=1e-12, abs=1e-12)


class TestRetrieveQL:
    def test_order(self):
        index = make_index({"d1": ["a", "b"], "d2": ["a", "a"]})
        assert retrieve_ql(index, ["a"], 0, 10).doc_ids == ["d2", "d1"]

    def test_oov_query(self):
        index = make_index({"d1": ["a", "b"]})
        assert retrieve_ql(index, ["z"], 100, 10).entries == []

    def test_tie_broken_by_doc_id(self):
        index = make_index({"d2": ["a", "b"], "d1": ["b", "a"]})
        assert retrieve_ql(index, ["a"], 100, 10).doc_ids == ["d1", "d2"]

    def test_k_truncates(self):
        index = make_index({f"d{i}": ["a"] * (i + 1) + ["b"] for i in range(5)})
        assert len(retrieve_ql(index, ["a"], 10, 2)) == 2

    def test_invalid(self):
        index = make_index({"d": ["a"]})
        with pytest.raises(AspectIRError):
            retrieve_ql(index, [], 10, 5)
        with pytest.raises(ValueError):
            retrieve_ql(index, ["a"], 10, 0)

    @pytest.mark.parametrize("mu", [0.0, 5.0, 1500.0])
    def test_matches_bruteforce(self, mu):
        rng = random.Random(11)
        for _ in range(10):
            docs = random_docs(rng, 10, vocab_size=6)
            query = [rng.choice([f"w{i}" for i in range(7)]) for _ in range(rng.randint(1, 3))]
            expected = bf_ql_ranking(docs, query, mu, 10)
            got = retrieve_ql(make_index(docs), query, mu, 10)
            assert got.doc_ids == [d for d, _ in expected]
            for (_, s1), (_, s2) in zip(got, expected):
                assert s1 == pytest.approx(s2, rel=1e-12) or s1 == s2


class TestRelevanceModel:
    def test_single_feedback_doc_equals_doc_mle(self):
        index = make_index({"d": ["a", "a", "b"]})
        rm = relevance_model_expand(index, ["a"], fb_docs=5, fb_terms=5, orig_weight=0.0, mu=0)
        assert rm.weights == pytest.approx({"a": 2 / 3, "b": 1 / 3})

    def test_orig_weight_one_is_query_mle(self):
        index = make_index({"d": ["a", "a", "b"], "e": ["c", "a"]})
        rm = relevance_model_expand(index, ["a", "c"], orig_weight=1.0, mu=10)
        assert rm.weights == {"a": 0.5, "c": 0.5}

    def test_no_feedback_returns_query_mle(self):
        index = make_index({"d": ["a"]})
        assert relevance_model_expand(index, ["zz"], mu=10).weights == {"zz": 1.0}

    def test_toy_defaults_match_bruteforce(self):
        docs = {"d1": ["a", "b", "c", "a"], "d2": ["b", "d", "e"], "d3": ["a", "e", "e", "f"]}
        index = make_index(docs)
        query = ["a", "e"]
        got = relevance_model_expand(index, query, 1000, 100, 0.75, 1500.0)
        expected = bf_rm(docs, query, 1000, 100, 0.75, 1500.0)
        assert set(got.weights) == set(expected)
        for w, p in expected.items():
            assert got[w] == pytest.approx(p, abs=1e-9)

    @pytest.mark.parametrize("fb_terms, mu", [(2, 0.0), (3, 10.0), (100, 2000.0)])
    def test_truncated_match_bruteforce(self, fb_terms, mu):
        rng = random.Random(fb_terms)
        for _ in range(5):
            docs = random_docs(rng, 3, vocab_size=7, min_len=2)
            query = [rng.choice(docs["d00"])]
            got = relevance_model_expand(make_index(docs), query, 2, fb_terms, 0.5, mu)
            expected = bf_rm(docs, query, 2, fb_terms, 0.5, mu)
            assert got.total() == pytest.approx(1.0, abs=1e-9)
            assert len(got) <= fb_terms + len(query)
            for w, p in expected.items():
                assert got[w] == pytest.approx(p, abs=1e-9)


class TestKL:
    def test_zero_for_identical_model(self, pc_tenth):
        mu = 10.0
        model = TermDistribution({w: smoothed_doc_prob(pc_tenth, "d1", w, mu) for w in pc_tenth.vocab})
        assert kl_divergence(model, pc_tenth, "d1", mu) == pytest.approx(0.0, abs=1e-12)

    def test_support_mismatch(self):
        index = make_index({"d1": ["a", "b"], "d2": ["a", "a"]})
        model = TermDistribution({"a": 0.5, "b": 0.5})
        assert kl_divergence(model, index, "d1", 0) == pytest.approx(0.0, abs=1e-15)
        assert kl_divergence(model, index, "d2", 0) == math.inf
        ranked = rank_by_kl(model, ["d2", "d1"], index, 0)
        assert ranked.doc_ids == ["d1", "d2"]
        assert ranked.ordering_key == "ascending-KL"

    def test_random_models_match_bruteforce(self):
        rng = random.Random(21)
        for _ in range(20):
            docs = random_docs(rng, 5, vocab_size=6)
            index = make_index(docs)
            vocab = sorted(index.vocab)
            raw = {w: rng.random() for w in rng.sample(vocab, rng.randint(1, len(vocab)))}
            model = TermDistribution.normalized(raw)
            for d in docs:
                got = kl_divergence(model, index, d, 50.0)
                assert got == pytest.approx(bf_kl(model.weights, docs, d, 50.0), abs=1e-9)
                assert got >= -1e-12


class TestRankByKL:
    def test_identical_doc_first(self):
        index = make_index({"same": ["a", "b", "b"], "other": ["c", "c", "a"]})
        model = TermDistribution.mle(["a", "b", "b"])
        assert rank_by_kl(model, ["other", "same"], index, 1.0).doc_ids[0] == "same"

    def test_unknown_candidate(self):
        index = make_index({"d": ["a"]})
        with pytest.raises(KeyError):
            rank_by_kl(TermDistribution({"a": 1.0}), ["d", "nope"], index, 10)

    def test_empty_candidates(self):
        with pytest.raises(AspectIRError):
            rank_by_kl(TermDistribution({"a": 1.0}), [], make_index({"d": ["a"]}), 10)

    def test_scores_match_per_term_kl(self):
        rng = random.Random(8)
        docs = random_docs(rng, 20, vocab_size=10)
        index = make_index(docs)
        model = TermDistribution.normalized({w: rng.random() for w in sorted(index.vocab)[:6]})
        for d, score in rank_by_kl(model, list(docs), index, 30.0):
            assert score == pytest.approx(kl_divergence(model, index, d, 30.0), abs=1e-10)

    @pytest.mark.parametrize("scale", [1.0, 0.01, 1e6])
    def test_matches_cross_entropy_ordering(self, scale):
        rng = random.Random(31)
        docs = random_docs(rng, 20, vocab_size=10)
        index = make_index(docs)
        model = TermDistribution.normalized({w: rng.random() for w in sorted(index.vocab)})
        # a uniform factor inside the log shifts every cross entropy by the same amount
        ce = {d: bf_cross_entropy(model.weights, docs, d, 25.0) + math.log(scale) for d in docs}
        expected = sorted(docs, key=lambda d: (-ce[d], d))
        got = rank_by_kl(model, list(docs), index, 25.0).doc_ids
        _assert_same_order_modulo_ties(got, expected, ce)


def _assert_same_order_modulo_ties(got, expected, score, tol=1e-9):
    assert sorted(got) == sorted(expected)
    for a, b in zip(got, expected):
        if a != b:
            assert abs(score[a] - score[b]) <= tol, (a, b)


def test_restrict_to_collection_drops_oov():
    index = make_index({"d": ["a", "b"]})
    model = TermDistribution({"a": 0.5, "zz": 0.5})
    assert restrict_to_collection(model, index).weights == {"a": 1.0}
    with pytest.raises(AspectIRError):
        restrict_to_collection(TermDistribution({"zz": 1.0}), index)


def test_ranked_list_rejects_duplicates():
    with pytest.raises(ValueError):
        RankedList([("d", 1.0), ("d", 0.5)])
