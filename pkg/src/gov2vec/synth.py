"""Synthetic tagged corpora with known ground truth, for acceptance testing.

Two presets:
  two-topic      sources A and B draw from disjoint topic vocabularies mixed
                 with a shared background (0.7 topic / 0.3 background).
  temporal-chain source k draws from an interpolation between two endpoint
                 topic mixtures, with weight drift * k/(n-1); positions 1..n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import RawDocument
from .trainer import SourceGraph

TWO_TOPIC = "two-topic"
TEMPORAL_CHAIN = "temporal-chain"
TOPIC_SHARE = 0.7


@dataclass
class SynthSpec:
    preset: str = TWO_TOPIC
    n_sources: int = 8  # temporal-chain only; two-topic always has 2
    docs_per_source: int = 200
    tokens_per_doc: int = 100
    topic_words: int = 50
    background_words: int = 200
    drift: float = 1.0
    seed: int = 1

    def __post_init__(self):
        if self.preset not in (TWO_TOPIC, TEMPORAL_CHAIN):
            raise ValueError(f"unknown preset {self.preset!r}")
        if min(self.n_sources, self.docs_per_source, self.tokens_per_doc,
               self.topic_words, self.background_words) < 1:
            raise ValueError("all counts must be >= 1")
        if not 0 <= self.drift <= 1:
            raise ValueError("drift must be in [0, 1]")
        if self.preset == TEMPORAL_CHAIN and self.n_sources < 2:
            raise ValueError("temporal chain needs at least 2 sources")


@dataclass
class GroundTruth:
    preset: str
    source_topics: dict[str, list[str]]  # per source (two-topic) or endpoint owner
    order: list[str] = field(default_factory=list)  # temporal-chain true order
    background: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "preset": self.preset,
            "source_topics": self.source_topics,
            "order": self.order,
            "background": self.background,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=1)

    @classmethod
    def load(cls, path) -> "GroundTruth":
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
        return cls(obj["preset"], obj["source_topics"], obj["order"], obj["background"])


def _letter_word(prefix: str, i: int) -> str:
    # digit-free words so they survive tokenization
    suffix = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        suffix = chr(ord("a") + r) + suffix
    return prefix + suffix


def _draw_doc(rng, word_lists, probs, n_tokens) -> str:
    groups = rng.choice(len(word_lists), size=n_tokens, p=probs)
    tokens = []
    for g in groups:
        words = word_lists[g]
        tokens.append(words[rng.integers(len(words))])
    return " ".join(tokens)


def generate(spec: SynthSpec) -> tuple[list[RawDocument], SourceGraph, GroundTruth]:
    rng = np.random.default_rng(spec.seed)
    background = [_letter_word("bg", i) for i in range(spec.background_words)]

    if spec.preset == TWO_TOPIC:
        names = ["govA", "govB"]
        topics = {
            name: [_letter_word(f"topic{name[-1].lower()}", i) for i in range(spec.topic_words)]
            for name in names
        }
        docs = []
        for name in names:
            for k in range(spec.docs_per_source):
                text = _draw_doc(
                    rng,
                    [topics[name], background],
                    [TOPIC_SHARE, 1 - TOPIC_SHARE],
                    spec.tokens_per_doc,
                )
                docs.append(RawDocument(f"{name}-{k:04d}", text, (name,)))
        graph = SourceGraph([(name, None) for name in names])
        truth = GroundTruth(spec.preset, topics, [], background)
        return docs, graph, truth

    n = spec.n_sources
    names = [f"gov{k + 1:02d}" for k in range(n)]
    start = [_letter_word("topicstart", i) for i in range(spec.topic_words)]
    end = [_letter_word("topicend", i) for i in range(spec.topic_words)]
    docs = []
    for k, name in enumerate(names):
        lam = spec.drift * k / (n - 1)
        # interpolate between the two endpoint (topic + background) mixtures
        probs = [
            (1 - lam) * TOPIC_SHARE,
            lam * TOPIC_SHARE,
            1 - TOPIC_SHARE,
        ]
        for j in range(spec.docs_per_source):
            text = _draw_doc(rng, [start, end, background], probs, spec.tokens_per_doc)
            docs.append(RawDocument(f"{name}-{j:04d}", text, (name,)))
    graph = SourceGraph([(name, k + 1) for k, name in enumerate(names)])
    truth = GroundTruth(
        spec.preset,
        {"start": start, "end": end},
        list(names),
        background,
    )
    return docs, graph, truth


def write_raw_jsonl(docs: list[RawDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            rec = {"id": doc.id, "text": doc.text, "tags": list(doc.tags)}
            f.write(json.dumps(rec) + "\n")
