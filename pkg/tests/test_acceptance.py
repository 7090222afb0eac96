"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. The two ensemble fixtures
train full 20-model searches and dominate the runtime (a few minutes).
"""

import itertools
import time

import numpy as np
import pytest

from gov2vec import analysis, corpus, synth
from gov2vec.cli import main
from gov2vec.corpus import TokenizedDocument
from gov2vec.hsm import HuffmanTree, hs_distribution, hs_loss_and_grads
from gov2vec.hyperopt import Ensemble, run_search
from gov2vec.query import QuerySpec, QueryTerm, cosine, nearest_words
from gov2vec.trainer import (
    SourceGraph,
    TrainConfig,
    load_model,
    lr_at,
    save_model,
    structural_loss,
    structural_step,
    word_step,
)

from conftest import FixedWindowRng, make_model
from oracles import brute_nearest, min_weighted_code_length


def report(criterion, text):
    print(f"\nACCEPTANCE {criterion}: PASS - {text}")


@pytest.fixture(scope="module")
def two_topic(tmp_path_factory):
    spec = synth.SynthSpec(preset="two-topic", seed=101)
    raw, graph, truth = synth.generate(spec)
    docs, vocab, _ = corpus.ingest(raw)
    out = tmp_path_factory.mktemp("two_topic_ens")
    t0 = time.monotonic()
    ens = run_search(docs, vocab, graph, TrainConfig(seed=101), 20,
                     np.random.default_rng(101), out)
    return ens, truth, time.monotonic() - t0


@pytest.fixture(scope="module")
def chain(tmp_path_factory):
    spec = synth.SynthSpec(preset="temporal-chain", n_sources=8, drift=1.0, seed=202)
    raw, graph, truth = synth.generate(spec)
    docs, vocab, _ = corpus.ingest(raw)
    out = tmp_path_factory.mktemp("chain_ens")
    ens = run_search(docs, vocab, graph, TrainConfig(seed=202, structured=True), 20,
                     np.random.default_rng(202), out)
    return ens, truth


def test_criterion_01_hs_normalization():
    t0 = time.monotonic()
    for i in range(100):
        rng = np.random.default_rng(1000 + i)
        m = int(rng.integers(2, 1001))
        d = int(rng.integers(2, 51))
        tree = HuffmanTree([int(f) for f in rng.integers(1, 100, m)])
        nodes = rng.normal(0, 0.7, (m - 1, d))
        h = rng.normal(0, 0.7, d)
        total = hs_distribution(nodes, tree, h).sum()
        assert abs(total - 1.0) <= 1e-9
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0
    report(1, f"sum of P(w|h) within 1e-9 of 1 for 100 random models in {elapsed:.1f}s")


def test_criterion_02_gradient_checks():
    eps = 1e-5

    def close(fd, an):
        assert fd == pytest.approx(an, rel=1e-4, abs=1e-7)

    for i in range(100):
        rng = np.random.default_rng(2000 + i)

        # hierarchical-softmax gradients
        tree = HuffmanTree([int(f) for f in rng.integers(1, 20, 8)])
        nodes = rng.normal(0, 0.6, (7, 7))
        h = rng.normal(0, 0.6, 7)
        w = int(rng.integers(8))
        _, grad_h, node_grads = hs_loss_and_grads(nodes, tree, h, w)
        for c in range(7):
            hp, hm = h.copy(), h.copy()
            hp[c] += eps
            hm[c] -= eps
            fd = (hs_loss_and_grads(nodes, tree, hp, w)[0]
                  - hs_loss_and_grads(nodes, tree, hm, w)[0]) / (2 * eps)
            close(fd, grad_h[c])
        node, gv = node_grads[int(rng.integers(len(node_grads)))]
        c = int(rng.integers(7))
        up, dn = nodes.copy(), nodes.copy()
        up[node, c] += eps
        dn[node, c] -= eps
        fd = (hs_loss_and_grads(up, tree, h, w)[0]
              - hs_loss_and_grads(dn, tree, h, w)[0]) / (2 * eps)
        close(fd, gv[c])

        # word_step contributor gradients (through the context mean)
        model = make_model(10, 2, 5, rng)
        model.config.window = 2
        words = [model.vocab.words[j][0] for j in rng.choice(10, 5, replace=False)]
        doc = TokenizedDocument("d", tuple(words), ("s0", "s1"))
        t = 2
        ctx = [model.vocab.index(words[j]) for j in range(5) if j != t]
        target = model.vocab.index(words[t])
        before_W, before_U = model.W_in.copy(), model.U.copy()
        before_nodes = model.W_node.copy()
        lr = 0.31
        word_step(model, doc, t, lr, FixedWindowRng(2))

        def loss_fn(W_in, U):
            hh = (W_in[ctx].sum(axis=0) + U[:2].sum(axis=0)) / (len(ctx) + 2)
            return hs_loss_and_grads(before_nodes, model.tree, hh, target)[0]

        for before, after, idx, is_word in (
            (before_W, model.W_in, ctx[0], True),
            (before_U, model.U, 0, False),
        ):
            c = int(rng.integers(5))
            implied = (before[idx, c] - after[idx, c]) / lr
            uw, uu = before_W.copy(), before_U.copy()
            (uw if is_word else uu)[idx, c] += eps
            dw, du = before_W.copy(), before_U.copy()
            (dw if is_word else du)[idx, c] -= eps
            close((loss_fn(uw, uu) - loss_fn(dw, du)) / (2 * eps), implied)

        # structural softmax gradients
        model = make_model(4, 3, 5, rng)
        graph = SourceGraph([("s0", 1), ("s1", 2), ("s2", 3)], edges=[("s1", "s2")])
        before = model.U.copy()
        structural_step(model, "s1", graph, lr)
        implied = (before - model.U) / lr
        for j in range(3):
            for c in range(5):
                up, dn = before.copy(), before.copy()
                up[j, c] += eps
                dn[j, c] -= eps
                fd = (structural_loss(up, 1, 2) - structural_loss(dn, 1, 2)) / (2 * eps)
                close(fd, implied[j, c])

    report(2, "HS, word-step and structural gradients match central differences "
              "(eps=1e-5, rel 1e-4) over 100 seeds")


def test_criterion_03_huffman_optimality():
    checked = 0
    for n in range(1, 9):
        for freqs in itertools.combinations_with_replacement(range(1, 11), n):
            tree = HuffmanTree(list(freqs))
            assert tree.weighted_code_length(freqs) == min_weighted_code_length(freqs)
            checked += 1
    report(3, f"weighted code length equals exhaustive minimum for all "
              f"{checked} frequency multisets of size <= 8")


def test_criterion_04_topic_separation(two_topic):
    ens, truth, elapsed = two_topic
    models = ens.models()
    assert len(models) == 20
    top10_hits = {s: 0 for s in truth.source_topics}
    for model in models:
        for source, topic in truth.source_topics.items():
            own = [w for w in topic if w in model.vocab]
            other_key = next(k for k in truth.source_topics if k != source)
            other = [w for w in truth.source_topics[other_key] if w in model.vocab]
            u = model.source_vector(source)
            mean_own = np.mean([cosine(u, model.word_vector(w)) for w in own])
            mean_other = np.mean([cosine(u, model.word_vector(w)) for w in other])
            assert mean_own > mean_other

            spec = QuerySpec([QueryTerm("source", source, 1)], threshold=0.0, top_k=10)
            top = [w for w, _ in nearest_words(model, spec)]
            if sum(w in set(own) for w in top) >= 8:
                top10_hits[source] += 1
    for source, hits in top10_hits.items():
        assert hits >= 18, f"{source}: only {hits}/20 models had >=8 own-topic words"
    assert elapsed < 900
    report(4, f"every model separates topics; top-10 own-topic hits "
              f"{dict(top10_hits)} of 20; search took {elapsed:.0f}s")


def test_criterion_05_temporal_recovery(chain):
    ens, truth = chain
    order = {s: k for k, s in enumerate(truth.order)}
    good = 0
    rhos = []
    for model in ens.models():
        pts = analysis.pca_2d(
            [(s, model.U[i]) for i, (s, _) in enumerate(model.sources)]
        )
        xs = [p.x for p in sorted(pts, key=lambda p: order[p.label])]
        rho = analysis.spearman(xs, list(range(len(xs))))
        rhos.append(rho)
        if abs(rho) >= 0.9:  # sign ambiguity allowed
            good += 1
    assert good >= 15, f"only {good}/20 models recover the ordering; rhos={rhos}"
    report(5, f"{good}/20 structured models order the chain on PC1 with |rho| >= 0.9")


def test_criterion_06_query_oracle_equivalence():
    for i in range(100):
        rng = np.random.default_rng(6000 + i)
        model = make_model(150, 3, 8, rng)
        words = rng.choice(150, 4, replace=False)
        # Fig.5-form query: two positive words, signed source pair, signed word pair
        terms = [
            QueryTerm("word", f"w{int(words[0]):03d}", 1),
            QueryTerm("word", f"w{int(words[1]):03d}", 1),
            QueryTerm("source", "s0", 1),
            QueryTerm("source", "s1", -1),
            QueryTerm("word", f"w{int(words[2]):03d}", 1),
            QueryTerm("word", f"w{int(words[3]):03d}", -1),
        ]
        spec = QuerySpec(terms, threshold=float(rng.uniform(0, 0.3)),
                         top_k=int(rng.integers(5, 40)))
        got = nearest_words(model, spec)
        expected = brute_nearest(model, spec)
        assert [w for w, _ in got] == [w for w, _ in expected]
        assert [s for _, s in got] == pytest.approx([s for _, s in expected], abs=1e-9)
    report(6, "nearest_words matches the exhaustive-scan oracle (set and order) "
              "on 100 random signed queries")


def test_criterion_07_spearman_unit_values():
    assert analysis.spearman([1, 2, 3], [10, 20, 30]) == 1.0
    assert analysis.spearman([1, 2, 3], [30, 20, 10]) == -1.0
    assert analysis.spearman([1, 2, 3], [3, 1, 2]) == -0.5
    report(7, "Spearman unit values exact: 1.0, -1.0, -0.5")


def test_criterion_08_tpe_efficacy():
    def objective(d, w):
        return (d - 150) ** 2 + (w - 17) ** 2

    tpe_best, rand_best = [], []
    for rep in range(50):
        ens = run_search(None, None, None, TrainConfig(), 20,
                         np.random.default_rng(8000 + rep), "/tmp/acc-tpe",
                         objective_fn=objective)
        tpe_best.append(min(t.objective for t in ens.trials))
        r = np.random.default_rng(9000 + rep)  # random-search oracle, equal budget
        rand_best.append(min(
            objective(int(r.integers(100, 201)), int(r.integers(10, 26)))
            for _ in range(20)
        ))
    med_tpe, med_rand = np.median(tpe_best), np.median(rand_best)
    assert med_tpe <= med_rand
    report(8, f"TPE median best {med_tpe:.1f} <= random-search median {med_rand:.1f} "
              f"over 50 repeated 20-trial searches")


def test_criterion_09_learning_rate_schedule():
    cfg = TrainConfig()
    assert lr_at(0, 1000, cfg) == 0.025
    assert lr_at(1000, 1000, cfg) == 0.001
    assert lr_at(500, 1000, cfg) == pytest.approx(0.013, abs=1e-12)
    report(9, "lr schedule endpoints 0.025/0.001 exact, midpoint 0.013 within 1e-12")


def test_criterion_10_persistence(two_topic, tmp_path):
    ens, _, _ = two_topic
    src = ens.trials[0].model_path
    resaved = tmp_path / "resaved.g2v"
    save_model(load_model(src), resaved)
    with open(src, "rb") as f:
        assert f.read() == resaved.read_bytes()

    manifest = tmp_path / "manifest.json"
    ens.save_manifest(manifest)
    assert Ensemble.load_manifest(manifest).trials == ens.trials
    report(10, "model save->load->save bit-identical; manifest round-trips")


def test_criterion_11_determinism(tmp_path):
    spec = synth.SynthSpec(preset="two-topic", docs_per_source=15,
                           tokens_per_doc=30, topic_words=8,
                           background_words=20, seed=7)
    raw, graph, truth = synth.generate(spec)
    synth.write_raw_jsonl(raw, tmp_path / "raw.jsonl")
    graph.save(tmp_path / "graph.json")
    assert main([
        "ingest", "--input", str(tmp_path / "raw.jsonl"),
        "--out-corpus", str(tmp_path / "c.jsonl"),
        "--out-vocab", str(tmp_path / "v.tsv"),
    ]) == 0

    import contextlib
    import io

    query_outputs, model_bytes = [], []
    word = truth.source_topics["govA"][0]
    for run_dir in ("r1", "r2"):
        out = tmp_path / run_dir
        assert main([
            "--seed", "33", "--deterministic", "search",
            "--corpus", str(tmp_path / "c.jsonl"),
            "--vocab", str(tmp_path / "v.tsv"),
            "--graph", str(tmp_path / "graph.json"),
            "--trials", "3", "--out-dir", str(out),
        ]) == 0
        model_bytes.append([p.read_bytes() for p in sorted(out.glob("model_*.g2v"))])
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            assert main([
                "query", "--ensemble", str(out / "manifest.json"),
                "--expr", f"+word:{word}", "--threshold", "0.0", "--top-k", "10",
            ]) == 0
        query_outputs.append(buf.getvalue())
    assert model_bytes[0] == model_bytes[1]
    assert len(model_bytes[0]) == 3
    assert query_outputs[0] == query_outputs[1]
    report(11, "repeated `search --trials 3` runs produce byte-identical models "
               "and query output")
