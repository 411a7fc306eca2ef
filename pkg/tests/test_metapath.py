import math
import random

import pytest

from aspectir.errors import AspectIRError, FormatError
from aspectir.metapath import (
    EntityDistribution,
    MetaPath,
    MetaPathSet,
    direct_inference,
    enumerate_metapaths,
    pra_score,
    pra_walk,
    softmax_over,
)

from conftest import make_graph, random_triples
from oracles import bf_direct_inference, bf_metapath_counts, bf_pra_walk

TOY = [
    ("speech_recognition", "application", "hidden_markov_model"),
    ("hidden_markov_model", "type", "generative_model"),
    ("speech_recognition", "application", "x"),
    ("x", "type", "generative_model"),
]
BRANCH = [("A", "r", "B"), ("A", "r", "C"), ("B", "s", "D")]


def _as_counts(mp_set):
    return {p.labels: a for p, a in mp_set.paths}


class TestEnumerate:
    def test_toy_graph_matches_oracle(self):
        got = _as_counts(enumerate_metapaths(make_graph(TOY), "application", 3))
        assert got == bf_metapath_counts(TOY, "application", 3)
        # both pairs detour through the shared type
        assert got[("application", "type", "type_inverse")] == 2
        assert ("type",) not in got

    def test_fig2_shape(self):
        triples = []
        for i in range(3):
            triples += [(f"h{i}", "application", f"t{i}"), (f"h{i}", "application", f"m{i}"), (f"t{i}", "type", f"m{i}")]
        got = _as_counts(enumerate_metapaths(make_graph(triples), "application", 2))
        assert got[("application", "type_inverse")] == 3

    def test_single_triple_is_empty(self):
        assert len(enumerate_metapaths(make_graph([("a", "r", "b")]), "r", 3)) == 0

    def test_include_direct_counts_trivial_path(self):
        mp = enumerate_metapaths(make_graph([("a", "r", "b")]), "r", 3, exclude_direct=False)
        assert _as_counts(mp)[("r",)] == 1

    def test_absent_relation(self):
        with pytest.raises(AspectIRError):
            enumerate_metapaths(make_graph(TOY), "algorithm", 3)

    def test_max_len_bound(self):
        assert len(enumerate_metapaths(make_graph(TOY), "application", 1)) == 0

    @pytest.mark.parametrize("max_len", [1, 2, 3])
    def test_random_graphs_match_oracle(self, max_len):
        rng = random.Random(max_len)
        for _ in range(15):
            triples = random_triples(rng, 8, 3, 14)
            relation = triples[0][1]
            got = enumerate_metapaths(make_graph(triples), relation, max_len)
            assert _as_counts(got) == bf_metapath_counts(triples, relation, max_len)
            alphas = [a for _, a in got.paths]
            assert alphas == sorted(alphas, reverse=True)
            assert all(1 <= len(p) <= max_len for p, _ in got.paths)


class TestMetaPathSet:
    def test_sorted_by_alpha_then_labels(self):
        mp = MetaPathSet("r", [(("b",), 1), (("a",), 1), (("c", "d"), 4)])
        assert [str(p) for p in mp.top(3)] == ["c,d", "a", "b"]

    def test_rejects_nonpositive_alpha_and_duplicates(self):
        with pytest.raises(ValueError):
            MetaPathSet("r", [(("a",), 0)])
        with pytest.raises(ValueError):
            MetaPathSet("r", [(("a",), 1), (("a",), 2)])

    def test_tsv_roundtrip(self, tmp_path):
        mp = enumerate_metapaths(make_graph(TOY), "application", 3)
        mp.save(tmp_path / "mp.tsv")
        loaded = MetaPathSet.load(tmp_path / "mp.tsv")
        assert loaded == mp
        assert (tmp_path / "mp.tsv").read_text().splitlines() == mp.to_tsv_lines()

    def test_load_empty(self, tmp_path):
        (tmp_path / "mp.tsv").write_text("")
        assert len(MetaPathSet.load(tmp_path / "mp.tsv", relation="r")) == 0
        with pytest.raises(FormatError):
            MetaPathSet.load(tmp_path / "mp.tsv")

    def test_load_bad_alpha(self, tmp_path):
        (tmp_path / "mp.tsv").write_text("r\ta,b\t2\nr\tc\tmany\n")
        with pytest.raises(FormatError) as err:
            MetaPathSet.load(tmp_path / "mp.tsv")
        assert err.value.line == 2


class TestPRAWalk:
    def test_empty_path(self):
        assert pra_walk(make_graph(BRANCH), "A", MetaPath(())).weights == {"A": 1.0}

    def test_two_step_dead_end(self):
        assert pra_walk(make_graph(BRANCH), "A", MetaPath(("r", "s"))).weights == {"D": 0.5}

    def test_one_step_uniform(self):
        assert pra_walk(make_graph(BRANCH), "A", MetaPath(("r",))).weights == {"B": 0.5, "C": 0.5}

    def test_unreachable(self):
        assert len(pra_walk(make_graph(BRANCH), "D", MetaPath(("r",)))) == 0

    def test_random_graphs_match_oracle(self):
        rng = random.Random(15)
        for _ in range(20):
            triples = random_triples(rng, 15, 3, 40)
            graph = make_graph(triples)
            labels = graph.relations
            for _ in range(5):
                path = tuple(rng.choice(labels) for _ in range(rng.randint(1, 3)))
                source = rng.choice(graph.entities)
                got = pra_walk(graph, source, MetaPath(path)).weights
                expected = bf_pra_walk(triples, source, path)
                assert set(got) == {e for e, v in expected.items() if v > 0}
                for e, v in expected.items():
                    assert got.get(e, 0.0) == pytest.approx(v, abs=1e-12)


class TestScores:
    def test_single_path_equals_walk(self):
        graph = make_graph(BRANCH)
        mp = MetaPathSet("r", [(("r",), 1)])
        assert pra_score(graph, "A", mp) == {"B": 0.5, "C": 0.5}

    def test_weighted_sum(self):
        # E gets h = 0.5 along <r,s> and h = 0.4 along <t,s>
        triples = [("A", "r", "B"), ("A", "r", "X"), ("B", "s", "E")]
        triples += [("A", "t", f"P{i}") for i in range(5)] + [("P0", "s", "E"), ("P1", "s", "E")]
        graph = make_graph(triples)
        assert pra_walk(graph, "A", MetaPath(("t", "s")))["E"] == pytest.approx(0.4)
        mp = MetaPathSet("r", [(("r", "s"), 2), (("t", "s"), 1)])
        assert pra_score(graph, "A", mp)["E"] == pytest.approx(1.4, abs=1e-12)

    def test_softmax_constant_is_uniform(self):
        probs = softmax_over(["a", "b", "c", "d"], {})
        assert all(p == pytest.approx(0.25) for p in probs.values())

    def test_direct_inference_value(self):
        graph = make_graph(BRANCH)
        mp = MetaPathSet("r", [(("r", "s"), 1)])
        di = direct_inference(graph, "A", mp)
        expected = math.exp(0.5) / (math.exp(0.5) + 3)
        assert di["D"] == pytest.approx(expected, abs=1e-12)
        assert di["D"] == pytest.approx(0.354661, abs=1e-6)
        assert di.total() == pytest.approx(1.0, abs=1e-12)

    def test_softmax_shift_invariant(self):
        rng = random.Random(4)
        entities = [f"e{i}" for i in range(10)]
        scores = {e: rng.uniform(-5, 5) for e in entities}
        shifted = {e: s + 700.0 for e, s in scores.items()}
        a, b = softmax_over(entities, scores), softmax_over(entities, shifted)
        for e in entities:
            assert a[e] == pytest.approx(b[e], abs=1e-12)

    def test_softmax_empty(self):
        with pytest.raises(AspectIRError):
            softmax_over([], {})

    def test_random_direct_inference_matches_oracle(self):
        rng = random.Random(99)
        for _ in range(10):
            triples = random_triples(rng, 15, 3, 40)
            graph = make_graph(triples)
            relation = triples[0][1]
            mp = enumerate_metapaths(graph, relation, 3)
            source = triples[0][0]
            got = direct_inference(graph, source, mp)
            expected = bf_direct_inference(triples, graph.entities, source, [(p.labels, a) for p, a in mp.paths])
            for e in graph.entities:
                assert got[e] == pytest.approx(expected[e], abs=1e-9)


def test_entity_distribution_validation():
    with pytest.raises(ValueError):
        EntityDistribution({"a": 0.7, "b": 0.7})
    with pytest.raises(ValueError):
        EntityDistribution({"a": -0.1})
    d = EntityDistribution({"a": 0.2, "b": 0.5, "c": 0.0})
    assert len(d) == 2 and d.argmax() == "b"
