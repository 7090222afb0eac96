import numpy as np
import pytest

from gov2vec.corpus import Vocabulary
from gov2vec.hsm import build_huffman
from gov2vec.trainer import EmbeddingModel, TrainConfig


def make_vocab(n_words: int, rng, max_freq: int = 50) -> Vocabulary:
    words = [(f"w{i:03d}", int(rng.integers(2, max_freq + 1))) for i in range(n_words)]
    words.sort(key=lambda wf: (-wf[1], wf[0]))
    return Vocabulary(words, n_words, sum(f for _, f in words))


def make_model(
    n_words: int,
    n_sources: int,
    d: int,
    rng,
    dtype=np.float64,
    zero_nodes: bool = False,
) -> EmbeddingModel:
    """Random dense model for math tests (float64 by default for FD checks)."""
    vocab = make_vocab(n_words, rng)
    sources = [(f"s{i}", i + 1) for i in range(n_sources)]
    W_in = rng.normal(0, 0.5, (n_words, d)).astype(dtype)
    U = rng.normal(0, 0.5, (n_sources, d)).astype(dtype)
    if zero_nodes:
        W_node = np.zeros((max(n_words - 1, 0), d), dtype=dtype)
    else:
        W_node = rng.normal(0, 0.5, (max(n_words - 1, 0), d)).astype(dtype)
    return EmbeddingModel(
        vocab, build_huffman(vocab), sources, W_in, U, W_node,
        TrainConfig(d=d, window=2),
    )


class FixedWindowRng:
    """Stands in for a Generator when a test needs a forced window reduction."""

    def __init__(self, r: int):
        self.r = r

    def integers(self, lo, hi):
        assert lo <= self.r < hi
        return self.r


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
