"""Signed word/source similarity queries, per model and across the ensemble.

Models in an ensemble have different dimensionalities, so vectors never
cross models: each model answers the query on its own, and only word
identities and scalar similarities are aggregated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQuery, UnknownIdentifier, UnknownWord, ZeroVector
from .trainer import EmbeddingModel

WORD = "word"
SOURCE = "source"


@dataclass(frozen=True)
class QueryTerm:
    kind: str  # "word" | "source"
    identifier: str
    sign: int  # +1 | -1

    def __post_init__(self):
        if self.kind not in (WORD, SOURCE):
            raise ValueError(f"bad term kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass
class QuerySpec:
    terms: list[QueryTerm]
    threshold: float = 0.35
    candidate_pool: int | None = None  # defaults to min(M, 50000) per model
    top_k: int | None = None

    def __post_init__(self):
        if not self.terms:
            raise ValueError("query needs at least one term")
        if not 0 <= self.threshold < 1:
            raise ValueError("threshold must be in [0, 1)")
        if self.candidate_pool is not None and self.candidate_pool < 1:
            raise ValueError("candidate pool must be >= 1")

    @property
    def query_words(self) -> set[str]:
        return {t.identifier for t in self.terms if t.kind == WORD}


@dataclass
class RankedWord:
    word: str
    model_count: int
    mean_similarity: float


def parse_query(expr: str) -> list[QueryTerm]:
    """Parse `+word:climate -gov:obama ...` into signed terms."""
    terms = []
    for raw in expr.split():
        sign = 1
        if raw[0] in "+-":
            sign = 1 if raw[0] == "+" else -1
            raw = raw[1:]
        if ":" not in raw:
            raise ValueError(f"term {raw!r} must look like word:ID or gov:ID")
        kind, ident = raw.split(":", 1)
        if kind == "gov":
            kind = SOURCE
        if not ident:
            raise ValueError(f"empty identifier in term {raw!r}")
        terms.append(QueryTerm(kind, ident, sign))
    if not terms:
        raise ValueError("empty query expression")
    return terms


def cosine(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vector")
    return float(a @ b / (na * nb))


def compose_query(model: EmbeddingModel, spec: QuerySpec) -> np.ndarray:
    """Mean of signed term vectors: (1/W) sum_i sign_i * vec_i."""
    missing = []
    total = np.zeros(model.d, dtype=np.float64)
    for term in spec.terms:
        try:
            vec = (
                model.word_vector(term.identifier)
                if term.kind == WORD
                else model.source_vector(term.identifier)
            )
        except (UnknownIdentifier, UnknownWord):
            missing.append(term.identifier)
            continue
        total += term.sign * vec.astype(np.float64)
    if missing:
        raise UnknownIdentifier(f"unresolvable query terms: {', '.join(missing)}")
    return total / len(spec.terms)


def _candidates(model: EmbeddingModel, spec: QuerySpec) -> list[int]:
    n = spec.candidate_pool
    if n is None:
        n = min(model.vocab.size, model.vocab.analysis_top_n)
    n = min(n, model.vocab.size)
    excluded = spec.query_words
    return [i for i in range(n) if model.vocab.words[i][0] not in excluded]


def nearest_words(model: EmbeddingModel, spec: QuerySpec) -> list[tuple[str, float]]:
    """Words among the N most frequent with cosine to the query above threshold."""
    q = compose_query(model, spec)
    qn = np.linalg.norm(q)
    if qn < 1e-12:
        raise DegenerateQuery("query terms cancel to a zero vector")
    cand = _candidates(model, spec)
    if not cand:
        return []
    vecs = model.W_in[cand].astype(np.float64)
    sims = vecs @ q / (np.linalg.norm(vecs, axis=1) * qn)
    hits = [
        (model.vocab.words[i][0], float(sim))
        for i, sim in zip(cand, sims)
        if sim > spec.threshold
    ]
    hits.sort(key=lambda ws: (-ws[1], ws[0]))
    return hits[: spec.top_k] if spec.top_k is not None else hits


def ensemble_query(models, spec: QuerySpec) -> list[RankedWord]:
    """Per-model nearest_words aggregated by retention count and mean cosine."""
    counts: dict[str, int] = {}
    sums: dict[str, float] = {}
    per_model = QuerySpec(spec.terms, spec.threshold, spec.candidate_pool, None)
    for model in models:
        for word, sim in nearest_words(model, per_model):
            counts[word] = counts.get(word, 0) + 1
            sums[word] = sums.get(word, 0.0) + sim
    ranked = [RankedWord(w, c, sums[w] / c) for w, c in counts.items()]
    ranked.sort(key=lambda r: (-r.model_count, -r.mean_similarity, r.word))
    return ranked[: spec.top_k] if spec.top_k is not None else ranked


def normalized_source_similarity(
    model: EmbeddingModel, source: str, spec: QuerySpec
) -> float:
    """cos(source, query) minus the source's mean cosine to the candidate words."""
    if any(t.kind != WORD for t in spec.terms):
        raise ValueError("normalization query must contain only word terms")
    u = model.source_vector(source).astype(np.float64)
    q = compose_query(model, spec)
    n = spec.candidate_pool
    if n is None:
        n = min(model.vocab.size, model.vocab.analysis_top_n)
    n = min(n, model.vocab.size)
    vecs = model.W_in[:n].astype(np.float64)
    sims = vecs @ u / (np.linalg.norm(vecs, axis=1) * np.linalg.norm(u))
    return cosine(u, q) - float(sims.mean())


def export_embeddings(model: EmbeddingModel) -> list[tuple[str, str, np.ndarray]]:
    """Every word and source row as (kind, label, vector); node rows excluded."""
    rows = [(WORD, w, model.W_in[i]) for i, (w, _) in enumerate(model.vocab.words)]
    rows += [(SOURCE, s, model.U[i]) for i, (s, _) in enumerate(model.sources)]
    return rows


def write_embeddings_tsv(model: EmbeddingModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for kind, label, vec in export_embeddings(model):
            vals = "\t".join(repr(float(x)) for x in vec)
            f.write(f"{kind}\t{label}\t{vals}\n")


def read_embeddings_tsv(path) -> list[tuple[str, str, np.ndarray]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            kind, label = parts[0], parts[1]
            vec = np.array([np.float32(x) for x in parts[2:]], dtype=np.float32)
            rows.append((kind, label, vec))
    return rows
