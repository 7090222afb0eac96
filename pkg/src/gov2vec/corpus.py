"""Corpus ingestion: tokenization, vocabulary construction, OOV filtering.

Cleaning rules: strip HTML tags and entities, lower-case, replace every
non-letter character with a space, split on whitespace, then drop stop
words and anything containing a digit. Words below the frequency cutoff
are removed at vocabulary-build time, not here.
"""

from __future__ import annotations

import html
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import EmptyVocabulary
from .stopwords import DEFAULT_STOPWORDS

DEFAULT_ANALYSIS_POOL = 50000

_HTML_TAG = re.compile(r"<[^>]*>")
# word chars minus digits/underscore == letters, any script
_NON_LETTER = re.compile(r"[\W\d_]+", re.UNICODE)
_HAS_DIGIT = re.compile(r"\d")


@dataclass(frozen=True)
class RawDocument:
    id: str
    text: str
    tags: tuple[str, ...]

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be nonempty")
        if not self.tags or any(not t for t in self.tags):
            raise ValueError(f"document {self.id!r} needs at least one nonempty tag")


@dataclass(frozen=True)
class TokenizedDocument:
    id: str
    tokens: tuple[str, ...]
    tags: tuple[str, ...]


@dataclass
class Vocabulary:
    """Retained words with frequencies, sorted by frequency desc then word asc."""

    words: list[tuple[str, int]]
    analysis_top_n: int
    retained_tokens: int
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {w: i for i, (w, _) in enumerate(self.words)}
        if self.analysis_top_n > len(self.words):
            raise ValueError("analysis subset larger than vocabulary")

    @property
    def size(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index(self, word: str) -> int:
        return self._index[word]

    @property
    def frequencies(self) -> list[int]:
        return [f for _, f in self.words]


def tokenize(text: str, stopwords=DEFAULT_STOPWORDS) -> list[str]:
    """Clean and split one text into retained tokens (possibly empty)."""
    text = _HTML_TAG.sub(" ", text)
    text = html.unescape(text)
    text = text.lower()
    text = _NON_LETTER.sub(" ", text)
    return [
        tok
        for tok in text.split()
        if tok not in stopwords and not _HAS_DIGIT.search(tok)
    ]


def build_vocab(
    docs: Iterable[TokenizedDocument],
    min_count: int = 2,
    analysis_top_n: int | None = None,
) -> Vocabulary:
    """Count token frequencies and retain words occurring >= min_count times."""
    counts = Counter()
    for doc in docs:
        counts.update(doc.tokens)
    kept = [(w, f) for w, f in counts.items() if f >= min_count]
    if not kept:
        raise EmptyVocabulary(f"no word occurs at least {min_count} times")
    kept.sort(key=lambda wf: (-wf[1], wf[0]))
    n = min(analysis_top_n or DEFAULT_ANALYSIS_POOL, len(kept))
    return Vocabulary(kept, n, sum(f for _, f in kept))


def filter_corpus(
    docs: Iterable[TokenizedDocument], vocab: Vocabulary
) -> tuple[list[TokenizedDocument], int]:
    """Drop out-of-vocabulary tokens; returns (kept docs, dropped-document count)."""
    kept, dropped = [], 0
    for doc in docs:
        tokens = tuple(t for t in doc.tokens if t in vocab)
        if tokens:
            kept.append(TokenizedDocument(doc.id, tokens, doc.tags))
        else:
            dropped += 1
    return kept, dropped


def ingest(
    raw_docs: Iterable[RawDocument],
    stopwords=DEFAULT_STOPWORDS,
    min_count: int = 2,
) -> tuple[list[TokenizedDocument], Vocabulary, int]:
    """Tokenize, build vocabulary, filter. Returns (docs, vocab, dropped count)."""
    seen = set()
    tokenized = []
    for raw in raw_docs:
        if raw.id in seen:
            raise ValueError(f"duplicate document id {raw.id!r}")
        seen.add(raw.id)
        tokenized.append(
            TokenizedDocument(raw.id, tuple(tokenize(raw.text, stopwords)), raw.tags)
        )
    vocab = build_vocab(tokenized, min_count)
    docs, dropped = filter_corpus(tokenized, vocab)
    return docs, vocab, dropped


# ---------------------------------------------------------------------------
# File I/O


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip() for line in f if line.strip())


def read_raw_jsonl(path) -> Iterator[RawDocument]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            yield RawDocument(rec["id"], rec["text"], tuple(rec["tags"]))


def read_raw_dir(directory) -> Iterator[RawDocument]:
    """Directory of text files plus a manifest.jsonl of {"id","file","tags"}."""
    directory = Path(directory)
    with open(directory / "manifest.jsonl", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            text = (directory / rec["file"]).read_text(encoding="utf-8")
            yield RawDocument(rec["id"], text, tuple(rec["tags"]))


def write_corpus_jsonl(docs: Iterable[TokenizedDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            rec = {"id": doc.id, "tokens": list(doc.tokens), "tags": list(doc.tags)}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_corpus_jsonl(path) -> list[TokenizedDocument]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            docs.append(
                TokenizedDocument(rec["id"], tuple(rec["tokens"]), tuple(rec["tags"]))
            )
    return docs


def write_vocab_tsv(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for word, freq in vocab.words:
            f.write(f"{word}\t{freq}\n")


def read_vocab_tsv(path, analysis_top_n: int | None = None) -> Vocabulary:
    words = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            word, freq = line.rstrip("\n").split("\t")
            words.append((word, int(freq)))
    if not words:
        raise EmptyVocabulary(f"empty vocabulary file {path}")
    n = min(analysis_top_n or DEFAULT_ANALYSIS_POOL, len(words))
    return Vocabulary(words, n, sum(f for _, f in words))
