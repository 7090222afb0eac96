"""Embedding training: CBOW-style word prediction with source vectors mixed
into the context, optionally alternating with source-neighbor prediction.

word_step / structural_step are single-update reference implementations used
directly in gradient tests; train() runs the same math through the compiled
kernel in fast_train.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import fast_train
from .corpus import TokenizedDocument, Vocabulary
from .errors import EmptyCorpus, UnknownIdentifier, UnknownWord
from .hsm import HuffmanTree, build_huffman, hs_loss_and_grads

MAGIC = b"G2V1"
NO_POSITION = 2**63 - 1  # sentinel for sources without a position
FLAG_STRUCTURED = 1


@dataclass
class SourceGraph:
    """Sources with optional integer positions and neighbor relations.

    Edges may be given explicitly; otherwise neighbors are derived as all
    sources whose positions differ by at most gov_window.
    """

    sources: list[tuple[str, Optional[int]]]
    edges: Optional[list[tuple[str, str]]] = None

    def __post_init__(self):
        ids = [s for s, _ in self.sources]
        if len(set(ids)) != len(ids):
            raise ValueError("source ids must be unique")
        self._ids = ids
        self._pos = {s: p for s, p in self.sources}

    @property
    def ids(self) -> list[str]:
        return self._ids

    def neighbors(self, gov_window: int = 1) -> dict[str, list[str]]:
        nbrs = {s: [] for s in self._ids}
        if self.edges is not None:
            for a, b in self.edges:
                if a not in nbrs or b not in nbrs:
                    raise UnknownIdentifier(f"edge ({a}, {b}) names unknown source")
                if b not in nbrs[a]:
                    nbrs[a].append(b)
                if a not in nbrs[b]:
                    nbrs[b].append(a)
        else:
            for a in self._ids:
                pa = self._pos[a]
                if pa is None:
                    continue
                for b in self._ids:
                    pb = self._pos[b]
                    if b == a or pb is None:
                        continue
                    if abs(pa - pb) <= gov_window:
                        nbrs[a].append(b)
        return nbrs

    @classmethod
    def from_tags(cls, docs: Sequence[TokenizedDocument]) -> "SourceGraph":
        seen = []
        for doc in docs:
            for tag in doc.tags:
                if tag not in seen:
                    seen.append(tag)
        return cls([(s, None) for s in seen])

    def to_json(self) -> dict:
        out = {
            "sources": [
                {"id": s} if p is None else {"id": s, "position": p}
                for s, p in self.sources
            ]
        }
        if self.edges is not None:
            out["edges"] = [list(e) for e in self.edges]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SourceGraph":
        sources = [(rec["id"], rec.get("position")) for rec in obj["sources"]]
        edges = [tuple(e) for e in obj["edges"]] if "edges" in obj else None
        return cls(sources, edges)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=1)

    @classmethod
    def load(cls, path) -> "SourceGraph":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


@dataclass
class TrainConfig:
    d: int = 100
    window: int = 10
    epochs: int = 25
    lr_start: float = 0.025
    lr_end: float = 0.001
    seed: int = 1
    structured: bool = False
    gov_window: int = 1
    structural_period: int = 1
    holdout_period: int = 50

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("dimension must be >= 2")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.lr_start > self.lr_end > 0:
            raise ValueError("need lr_start > lr_end > 0")
        if self.structured and self.gov_window < 1:
            raise ValueError("gov_window must be >= 1 for structured training")


@dataclass
class EmbeddingModel:
    vocab: Vocabulary
    tree: HuffmanTree
    sources: list[tuple[str, Optional[int]]]
    W_in: np.ndarray  # M x d word vectors
    U: np.ndarray  # S x d source vectors
    W_node: np.ndarray  # (M-1) x d internal-node vectors
    config: TrainConfig
    objective: float = float("nan")
    _source_index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._source_index:
            self._source_index = {s: i for i, (s, _) in enumerate(self.sources)}

    @property
    def d(self) -> int:
        return self.W_in.shape[1]

    def word_vector(self, word: str) -> np.ndarray:
        try:
            return self.W_in[self.vocab.index(word)]
        except KeyError:
            raise UnknownWord(f"word {word!r} not in vocabulary") from None

    def source_vector(self, source: str) -> np.ndarray:
        try:
            return self.U[self._source_index[source]]
        except KeyError:
            raise UnknownIdentifier(f"source {source!r} not in model") from None

    def source_index(self, source: str) -> int:
        try:
            return self._source_index[source]
        except KeyError:
            raise UnknownIdentifier(f"source {source!r} not in model") from None


def init_model(
    vocab: Vocabulary,
    sources: list[tuple[str, Optional[int]]],
    config: TrainConfig,
) -> EmbeddingModel:
    """Seeded uniform [-0.5/d, 0.5/d] init for word/source rows, zero nodes."""
    if vocab.size < 1 or not sources:
        raise ValueError("vocabulary and sources must be non-empty")
    rng = np.random.default_rng(config.seed)
    d = config.d
    scale = 0.5 / d
    W_in = rng.uniform(-scale, scale, (vocab.size, d)).astype(np.float32)
    U = rng.uniform(-scale, scale, (len(sources), d)).astype(np.float32)
    W_node = np.zeros((max(vocab.size - 1, 0), d), dtype=np.float32)
    tree = build_huffman(vocab)
    return EmbeddingModel(vocab, tree, list(sources), W_in, U, W_node, config)


def lr_at(step: int, total_steps: int, config: TrainConfig) -> float:
    if not 0 <= step <= total_steps or total_steps < 1:
        raise ValueError("need 0 <= step <= total_steps, total_steps >= 1")
    frac = step / total_steps
    return config.lr_start * (1.0 - frac) + config.lr_end * frac


def word_step(model: EmbeddingModel, doc: TokenizedDocument, t: int, lr: float, rng):
    """One CBOW update at position t. Returns True if an update happened."""
    tokens = doc.tokens
    window = model.config.window
    r = int(rng.integers(1, window + 1))
    lo, hi = max(0, t - r), min(len(tokens) - 1, t + r)
    ctx = [model.vocab.index(tokens[j]) for j in range(lo, hi + 1) if j != t]
    if not ctx:
        return False
    tag_idx = [model.source_index(tag) for tag in doc.tags]
    contributors = len(ctx) + len(tag_idx)
    h = (model.W_in[ctx].sum(axis=0) + model.U[tag_idx].sum(axis=0)) / contributors
    target = model.vocab.index(tokens[t])
    _, grad_h, node_grads = hs_loss_and_grads(model.W_node, model.tree, h, target)
    for node, grad in node_grads:
        model.W_node[node] -= lr * grad
    per_contrib = lr * grad_h / contributors
    for w in ctx:
        model.W_in[w] -= per_contrib
    for s in tag_idx:
        model.U[s] -= per_contrib
    return True


def structural_loss(U, s: int, s_prime: int) -> float:
    """-log softmax_{s'}(U . U[s]) over all sources."""
    z = U @ U[s]
    z = z - z.max()
    return float(np.log(np.exp(z).sum()) - z[s_prime])


def structural_step(model: EmbeddingModel, source: str, graph: SourceGraph, lr: float):
    """Predict each neighbor of `source` with a full softmax over sources."""
    s = model.source_index(source)
    U = model.U
    for nbr in graph.neighbors(model.config.gov_window)[source]:
        sp = model.source_index(nbr)
        u_s = U[s].copy()
        z = U @ u_s
        z = z - z.max()
        p = np.exp(z)
        p /= p.sum()
        coef = p.astype(U.dtype)
        coef[sp] -= 1
        grad_s = coef @ U  # through every z_j, pre-update rows
        U -= lr * np.outer(coef, u_s)
        U[s] -= lr * grad_s


def _encode(docs, vocab: Vocabulary, source_ids: list[str]):
    src_index = {s: i for i, s in enumerate(source_ids)}
    tokens, doc_offsets = [], [0]
    tag_flat, tag_offsets = [], [0]
    for doc in docs:
        for tok in doc.tokens:
            tokens.append(vocab.index(tok))
        doc_offsets.append(len(tokens))
        for tag in doc.tags:
            if tag not in src_index:
                raise UnknownIdentifier(f"document {doc.id!r} tagged with unknown source {tag!r}")
            tag_flat.append(src_index[tag])
        tag_offsets.append(len(tag_flat))
    return (
        np.array(tokens, dtype=np.int32),
        np.array(doc_offsets, dtype=np.int64),
        np.array(tag_flat, dtype=np.int32),
        np.array(tag_offsets, dtype=np.int64),
    )


def _neighbor_arrays(graph: SourceGraph, source_ids: list[str], gov_window: int):
    nbrs = graph.neighbors(gov_window)
    idx = {s: i for i, s in enumerate(source_ids)}
    flat, off = [], [0]
    for s in source_ids:
        flat.extend(idx[n] for n in nbrs[s])
        off.append(len(flat))
    return np.array(flat, dtype=np.int32), np.array(off, dtype=np.int64)


def heldout_objective(model: EmbeddingModel, docs) -> float:
    """Mean HS loss over the held-out contexts selected by the model's config."""
    source_ids = [s for s, _ in model.sources]
    tokens, doc_off, tag_flat, tag_off = _encode(docs, model.vocab, source_ids)
    cfg = model.config
    offset = cfg.seed % cfg.holdout_period if cfg.holdout_period > 0 else 0
    return float(
        fast_train.heldout_loss_kernel(
            model.W_in,
            model.U,
            model.W_node,
            tokens,
            doc_off,
            tag_flat,
            tag_off,
            model.tree.code_bits,
            model.tree.code_offsets,
            model.tree.path_nodes,
            cfg.window,
            cfg.holdout_period,
            offset,
        )
    )


def train(
    docs: Sequence[TokenizedDocument],
    vocab: Vocabulary,
    graph: Optional[SourceGraph],
    config: TrainConfig,
) -> EmbeddingModel:
    """Train a model over `docs` (already filtered against `vocab`)."""
    docs = list(docs)
    if not docs:
        raise EmptyCorpus("no documents to train on")
    if graph is None:
        graph = SourceGraph.from_tags(docs)
    model = init_model(vocab, graph.sources, config)
    source_ids = [s for s, _ in graph.sources]
    tokens, doc_off, tag_flat, tag_off = _encode(docs, vocab, source_ids)

    offset = config.seed % config.holdout_period if config.holdout_period > 0 else 0
    if config.holdout_period > 0:
        positions = np.arange(len(tokens))
        trainable = int(np.sum(positions % config.holdout_period != offset))
    else:
        trainable = len(tokens)
    total_steps = max(config.epochs * trainable, 1)

    nbr_flat, nbr_off = _neighbor_arrays(graph, source_ids, config.gov_window)
    fast_train.train_kernel(
        model.W_in,
        model.U,
        model.W_node,
        tokens,
        doc_off,
        tag_flat,
        tag_off,
        model.tree.code_bits,
        model.tree.code_offsets,
        model.tree.path_nodes,
        config.window,
        config.epochs,
        config.lr_start,
        config.lr_end,
        total_steps,
        config.holdout_period,
        offset,
        config.structured,
        config.structural_period,
        nbr_flat,
        nbr_off,
        config.seed % 2**32,
    )
    if not (
        np.isfinite(model.W_in).all()
        and np.isfinite(model.U).all()
        and np.isfinite(model.W_node).all()
    ):
        raise FloatingPointError("training produced non-finite parameters")
    model.objective = heldout_objective(model, docs)
    return model


# ---------------------------------------------------------------------------
# Model persistence (little-endian binary, magic "G2V1")


def save_model(model: EmbeddingModel, path) -> None:
    m, s, d = model.vocab.size, len(model.sources), model.d
    flags = FLAG_STRUCTURED if model.config.structured else 0
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIII", d, m, s, flags))
        for word, freq in model.vocab.words:
            raw = word.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<Q", freq))
        for sid, pos in model.sources:
            raw = sid.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<q", NO_POSITION if pos is None else pos))
        for arr in (model.W_in, model.U, model.W_node):
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        f.write(struct.pack("<d", model.objective))


def load_model(path) -> EmbeddingModel:
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: not a gov2vec model file")
        d, m, s, flags = struct.unpack("<IIII", f.read(16))
        words = []
        for _ in range(m):
            (n,) = struct.unpack("<I", f.read(4))
            word = f.read(n).decode("utf-8")
            (freq,) = struct.unpack("<Q", f.read(8))
            words.append((word, freq))
        sources = []
        for _ in range(s):
            (n,) = struct.unpack("<I", f.read(4))
            sid = f.read(n).decode("utf-8")
            (pos,) = struct.unpack("<q", f.read(8))
            sources.append((sid, None if pos == NO_POSITION else pos))

        def read_f32(rows):
            buf = f.read(rows * d * 4)
            return np.frombuffer(buf, dtype="<f4").reshape(rows, d).copy()

        W_in = read_f32(m)
        U = read_f32(s)
        W_node = read_f32(max(m - 1, 0))
        (objective,) = struct.unpack("<d", f.read(8))

    vocab = Vocabulary(words, min(m, 50000), sum(f for _, f in words))
    config = TrainConfig(d=d, structured=bool(flags & FLAG_STRUCTURED))
    return EmbeddingModel(
        vocab, build_huffman(vocab), sources, W_in, U, W_node, config, objective
    )
