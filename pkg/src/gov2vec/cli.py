"""Command-line driver for the full pipeline.

Subcommands: ingest, train, search, query, sim, pairsim, pca, corr, synth.
Usage errors exit 2 (argparse), data errors exit 1 with a message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, corpus, hyperopt, query, synth, trainer
from .errors import Gov2VecError


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="tokenized corpus JSONL")
    p.add_argument("--vocab", required=True, help="vocabulary TSV")
    p.add_argument("--graph", help="source graph JSON (default: derive from tags)")
    p.add_argument("--epochs", type=int, default=25, help="training epochs (default 25)")
    p.add_argument("--lr-start", type=float, default=0.025, help="initial learning rate (default 0.025)")
    p.add_argument("--lr-end", type=float, default=0.001, help="final learning rate (default 0.001)")
    p.add_argument("--structured", action="store_true", help="alternate with source-neighbor prediction")
    p.add_argument("--gov-window", type=int, default=1, help="max position distance for source neighbors (default 1)")
    p.add_argument("--structural-period", type=int, default=1, help="documents between structural steps (default 1)")
    p.add_argument("--holdout-period", type=int, default=50, help="every k-th context held out for the objective (default 50)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gov2vec")
    parser.add_argument("--seed", type=int, default=1, help="global random seed (default 1)")
    parser.add_argument("--threads", type=int, default=1, help="training threads (only 1 is implemented)")
    parser.add_argument("--deterministic", action="store_true", help="force bit-reproducible single-threaded mode")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="raw documents -> corpus JSONL + vocabulary TSV")
    p.add_argument("--input", required=True, help="raw JSONL file, or directory with manifest.jsonl")
    p.add_argument("--stopwords", help="stop-word file, one per line (default: bundled list)")
    p.add_argument("--min-count", type=int, default=2, help="minimum word frequency (default 2)")
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-vocab", required=True)

    p = sub.add_parser("train", help="corpus + graph -> one model file")
    _add_train_flags(p)
    p.add_argument("--dim", type=int, default=100, help="embedding dimension (default 100)")
    p.add_argument("--window", type=int, default=10, help="max context distance (default 10)")
    p.add_argument("--out", required=True, help="output model file")

    p = sub.add_parser("search", help="TPE hyperparameter search -> model ensemble")
    _add_train_flags(p)
    p.add_argument("--trials", type=int, default=20, help="ensemble size J (default 20)")
    p.add_argument("--d-min", type=int, default=100, help="dimension range lower bound (default 100)")
    p.add_argument("--d-max", type=int, default=200, help="dimension range upper bound (default 200)")
    p.add_argument("--window-min", type=int, default=10, help="window range lower bound (default 10)")
    p.add_argument("--window-max", type=int, default=25, help="window range upper bound (default 25)")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("query", help="signed similarity query over an ensemble")
    p.add_argument("--ensemble", required=True, help="ensemble manifest JSON")
    p.add_argument("--expr", required=True, help="e.g. '+word:climate +word:emissions -gov:obama'")
    p.add_argument("--threshold", type=float, default=0.35, help="retention cosine threshold C (default 0.35)")
    p.add_argument("--top-k", type=int, help="truncate ranking")
    p.add_argument("--pool", type=int, help="candidate pool size N (default min(M, 50000))")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")

    p = sub.add_parser("sim", help="normalized source-to-query similarity table")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--source", action="append", required=True, help="source id (repeatable)")
    p.add_argument("--expr", required=True, help="word terms only")
    p.add_argument("--pool", type=int, help="candidate pool size N")

    p = sub.add_parser("pairsim", help="ensemble-mean cosine for source pairs")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--pairs", required=True, help="TSV: labelA<TAB>labelB")

    p = sub.add_parser("pca", help="2-D PCA of one model's source vectors")
    p.add_argument("--model", required=True)

    p = sub.add_parser("corr", help="Spearman rho of two label<TAB>value TSV series")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = sub.add_parser("synth", help="generate a synthetic ground-truth corpus")
    p.add_argument("--preset", choices=(synth.TWO_TOPIC, synth.TEMPORAL_CHAIN), default=synth.TWO_TOPIC)
    p.add_argument("--n-sources", type=int, default=8, help="chain length (default 8)")
    p.add_argument("--docs-per-source", type=int, default=200)
    p.add_argument("--tokens-per-doc", type=int, default=100)
    p.add_argument("--topic-words", type=int, default=50)
    p.add_argument("--background-words", type=int, default=200)
    p.add_argument("--drift", type=float, default=1.0, help="chain mixing rate (default 1.0)")
    p.add_argument("--out-dir", required=True)
    return parser


def _load_raw(path: str):
    p = Path(path)
    if p.is_dir():
        return list(corpus.read_raw_dir(p))
    return list(corpus.read_raw_jsonl(p))


def _train_config(args, d: int, window: int) -> trainer.TrainConfig:
    return trainer.TrainConfig(
        d=d,
        window=window,
        epochs=args.epochs,
        lr_start=args.lr_start,
        lr_end=args.lr_end,
        seed=args.seed,
        structured=args.structured,
        gov_window=args.gov_window,
        structural_period=args.structural_period,
        holdout_period=args.holdout_period,
    )


def _load_training_inputs(args):
    docs = corpus.read_corpus_jsonl(args.corpus)
    vocab = corpus.read_vocab_tsv(args.vocab)
    graph = trainer.SourceGraph.load(args.graph) if args.graph else None
    return docs, vocab, graph


def _read_series(path) -> dict[str, float]:
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            label, value = line.rstrip("\n").split("\t")
            out[label] = float(value)
    return out


def _run(args) -> int:
    if args.threads > 1:
        print("note: parallel training is not implemented; running sequentially", file=sys.stderr)

    if args.command == "ingest":
        stop = corpus.load_stopwords(args.stopwords) if args.stopwords else corpus.DEFAULT_STOPWORDS
        docs, vocab, dropped = corpus.ingest(_load_raw(args.input), stop, args.min_count)
        corpus.write_corpus_jsonl(docs, args.out_corpus)
        corpus.write_vocab_tsv(vocab, args.out_vocab)
        print(
            f"ingested {len(docs)} documents ({dropped} dropped empty), "
            f"{vocab.size} words, {vocab.retained_tokens} tokens",
            file=sys.stderr,
        )

    elif args.command == "train":
        docs, vocab, graph = _load_training_inputs(args)
        model = trainer.train(docs, vocab, graph, _train_config(args, args.dim, args.window))
        trainer.save_model(model, args.out)
        print(f"held-out objective {model.objective:.6f}", file=sys.stderr)

    elif args.command == "search":
        docs, vocab, graph = _load_training_inputs(args)
        space = hyperopt.SearchSpace((args.d_min, args.d_max), (args.window_min, args.window_max))
        rng = np.random.default_rng(args.seed)
        base = _train_config(args, args.d_min, args.window_min)
        ensemble = hyperopt.run_search(docs, vocab, graph, base, args.trials, rng, args.out_dir, space)
        print(f"saved {len(ensemble.trials)} models to {args.out_dir}", file=sys.stderr)

    elif args.command == "query":
        ensemble = hyperopt.Ensemble.load_manifest(args.ensemble)
        spec = query.QuerySpec(query.parse_query(args.expr), args.threshold, args.pool, args.top_k)
        ranked = query.ensemble_query(ensemble.models(), spec)
        if args.format == "json":
            print(json.dumps(
                [{"word": r.word, "model_count": r.model_count, "mean_similarity": r.mean_similarity}
                 for r in ranked]))
        else:
            for r in ranked:
                print(f"{r.word}\t{r.model_count}\t{r.mean_similarity:.6f}")

    elif args.command == "sim":
        ensemble = hyperopt.Ensemble.load_manifest(args.ensemble)
        spec = query.QuerySpec(query.parse_query(args.expr), candidate_pool=args.pool)
        models = ensemble.models()
        for source in args.source:
            vals = [query.normalized_source_similarity(m, source, spec) for m in models]
            print(f"{source}\t{np.mean(vals):.6f}")

    elif args.command == "pairsim":
        ensemble = hyperopt.Ensemble.load_manifest(args.ensemble)
        pairs = []
        with open(args.pairs, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    a, b = line.rstrip("\n").split("\t")
                    pairs.append((a, b))
        for (a, b), sim in zip(pairs, analysis.similarity_series(ensemble.models(), pairs)):
            print(f"{a}\t{b}\t{sim:.6f}")

    elif args.command == "pca":
        model = trainer.load_model(args.model)
        points = analysis.pca_2d([(s, model.U[i]) for i, (s, _) in enumerate(model.sources)])
        for pt in points:
            print(f"{pt.label}\t{pt.x:.6f}\t{pt.y:.6f}")

    elif args.command == "corr":
        a, b = _read_series(args.a), _read_series(args.b)
        keys = [k for k in a if k in b]
        if len(keys) < 3:
            raise Gov2VecError("series share fewer than 3 labels")
        rho = analysis.spearman([a[k] for k in keys], [b[k] for k in keys])
        print(f"{rho:.6f}")

    elif args.command == "synth":
        spec = synth.SynthSpec(
            preset=args.preset,
            n_sources=args.n_sources,
            docs_per_source=args.docs_per_source,
            tokens_per_doc=args.tokens_per_doc,
            topic_words=args.topic_words,
            background_words=args.background_words,
            drift=args.drift,
            seed=args.seed,
        )
        docs, graph, truth = synth.generate(spec)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        synth.write_raw_jsonl(docs, out / "corpus.jsonl")
        graph.save(out / "graph.json")
        truth.save(out / "ground_truth.json")
        print(f"wrote {len(docs)} documents to {out}", file=sys.stderr)

    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (Gov2VecError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
