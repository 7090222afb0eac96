import itertools
from collections import Counter

import pytest

from gov2vec import synth
from gov2vec.corpus import tokenize
from gov2vec.synth import SynthSpec, generate


def small(preset, **kw):
    defaults = dict(
        docs_per_source=20, tokens_per_doc=40, topic_words=10,
        background_words=25, seed=3,
    )
    defaults.update(kw)
    return SynthSpec(preset=preset, **defaults)


def unigram(docs, source):
    counts = Counter()
    for d in docs:
        if d.tags == (source,):
            counts.update(d.text.split())
    total = sum(counts.values())
    return {w: c / total for w, c in counts.items()}


def tv_distance(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys)


class TestTwoTopic:
    def test_topic_vocabularies_disjoint(self):
        docs, graph, truth = generate(small("two-topic"))
        a = set(truth.source_topics["govA"])
        b = set(truth.source_topics["govB"])
        assert not a & b
        seen_a = {t for d in docs if d.tags == ("govA",) for t in d.text.split()}
        assert not seen_a & b

    def test_tokens_survive_tokenization(self):
        docs, _, _ = generate(small("two-topic"))
        for d in docs[:5]:
            assert tokenize(d.text, set()) == d.text.split()

    def test_one_tag_per_document(self):
        docs, graph, _ = generate(small("two-topic"))
        assert all(len(d.tags) == 1 for d in docs)
        assert {d.tags[0] for d in docs} == set(graph.ids)


class TestTemporalChain:
    def test_positions_match_graph(self):
        docs, graph, truth = generate(small("temporal-chain", n_sources=5))
        assert [p for _, p in graph.sources] == [1, 2, 3, 4, 5]
        assert truth.order == [s for s, _ in graph.sources]
        nbrs = graph.neighbors(1)
        assert nbrs[truth.order[0]] == [truth.order[1]]
        assert sorted(nbrs[truth.order[2]]) == sorted([truth.order[1], truth.order[3]])

    def test_zero_drift_shares_one_distribution(self):
        docs, _, truth = generate(small("temporal-chain", n_sources=4, drift=0.0))
        end_words = set(truth.source_topics["end"])
        assert all(not set(d.text.split()) & end_words for d in docs)

    def test_endpoints_have_largest_tv_distance(self):
        spec = small("temporal-chain", n_sources=8, docs_per_source=60, drift=1.0)
        docs, graph, truth = generate(spec)
        dists = {s: unigram(docs, s) for s in truth.order}
        pair_tv = {
            (a, b): tv_distance(dists[a], dists[b])
            for a, b in itertools.combinations(truth.order, 2)
        }
        assert max(pair_tv, key=pair_tv.get) == (truth.order[0], truth.order[-1])


class TestDeterminismAndValidation:
    def test_same_seed_identical_bytes(self, tmp_path):
        for run in ("a", "b"):
            docs, _, _ = generate(small("two-topic", seed=11))
            synth.write_raw_jsonl(docs, tmp_path / f"{run}.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_ground_truth_round_trip(self, tmp_path):
        _, _, truth = generate(small("temporal-chain", n_sources=4))
        truth.save(tmp_path / "gt.json")
        loaded = synth.GroundTruth.load(tmp_path / "gt.json")
        assert loaded.to_json() == truth.to_json()

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(preset="nonsense")
        with pytest.raises(ValueError):
            SynthSpec(drift=1.5)
        with pytest.raises(ValueError):
            SynthSpec(preset="temporal-chain", n_sources=1)
        with pytest.raises(ValueError):
            SynthSpec(tokens_per_doc=0)
