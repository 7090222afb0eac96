"""Binary Huffman tree and hierarchical-softmax probability/gradient math.

The word distribution is factored over the Huffman tree: predicting word w
costs one sigmoid per internal node on its root-to-leaf path. Code bit 1
maps to sigma(v.h), bit 0 to sigma(-v.h); internal nodes are indexed by
creation order during the merge, so the tree is deterministic for a given
vocabulary ordering.
"""

from __future__ import annotations

import heapq

import numpy as np

from .corpus import Vocabulary
from .errors import UnknownWord

SIGMOID_CLAMP = 30.0


def sigmoid(x):
    """Logistic function with inputs clamped to +-30 to avoid overflow."""
    x = np.clip(x, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return 1.0 / (1.0 + np.exp(-x))


class HuffmanTree:
    """Frequency-optimal binary code tree over a vocabulary.

    Exposes per-word bit codes and root-to-leaf internal-node paths, plus
    flattened CSR-style arrays (code_offsets / code_bits / path_nodes) for
    the training hot loop.
    """

    def __init__(self, frequencies: list[int]):
        m = len(frequencies)
        if m < 1:
            raise ValueError("need at least one word")
        self.leaf_count = m
        self.internal_count = m - 1

        # heap entries: (frequency, creation order). Leaves are created in
        # vocabulary order; merged nodes get increasing creation ids, so
        # frequency ties resolve to the earliest-created node.
        heap = [(f, i) for i, f in enumerate(frequencies)]
        heapq.heapify(heap)
        parent = np.full(2 * m - 1, -1, dtype=np.int64)
        bit = np.zeros(2 * m - 1, dtype=np.uint8)
        next_id = m
        while len(heap) > 1:
            fa, a = heapq.heappop(heap)
            fb, b = heapq.heappop(heap)
            parent[a], parent[b] = next_id, next_id
            bit[b] = 1  # first-popped child takes bit 0
            heapq.heappush(heap, (fa + fb, next_id))
            next_id += 1

        codes, paths = [], []
        for leaf in range(m):
            rev_bits, rev_nodes = [], []
            node = leaf
            while parent[node] >= 0:
                rev_bits.append(bit[node])
                rev_nodes.append(parent[node] - m)  # internal index 0..m-2
                node = parent[node]
            codes.append(np.array(rev_bits[::-1], dtype=np.uint8))
            paths.append(np.array(rev_nodes[::-1], dtype=np.int32))
        self.codes = codes
        self.paths = paths

        lens = np.array([len(c) for c in codes], dtype=np.int64)
        self.code_offsets = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        self.code_bits = (
            np.concatenate(codes) if m > 1 else np.zeros(0, dtype=np.uint8)
        )
        self.path_nodes = (
            np.concatenate(paths) if m > 1 else np.zeros(0, dtype=np.int32)
        )

    def code_length(self, word_index: int) -> int:
        return len(self.codes[word_index])

    def weighted_code_length(self, frequencies) -> int:
        return int(sum(f * len(c) for f, c in zip(frequencies, self.codes)))


def build_huffman(vocab: Vocabulary) -> HuffmanTree:
    return HuffmanTree(vocab.frequencies)


def _check_word(tree: HuffmanTree, word_index: int) -> None:
    if not 0 <= word_index < tree.leaf_count:
        raise UnknownWord(f"word index {word_index} outside vocabulary")


def hs_probability(node_vectors, tree: HuffmanTree, h, word_index: int) -> float:
    """P(word | h) = prod_k sigma(sign_k * v_k . h) over the word's path."""
    _check_word(tree, word_index)
    path = tree.paths[word_index]
    if len(path) == 0:
        return 1.0
    signs = np.where(tree.codes[word_index] == 1, 1.0, -1.0)
    z = node_vectors[path] @ np.asarray(h)
    return float(np.prod(sigmoid(signs * z)))


def hs_distribution(node_vectors, tree: HuffmanTree, h):
    """P(w | h) for every vocabulary word (tests normalization cheaply)."""
    if tree.leaf_count == 1:
        return np.ones(1)
    pos = sigmoid(node_vectors @ np.asarray(h))
    per_step = np.where(
        tree.code_bits == 1, pos[tree.path_nodes], 1.0 - pos[tree.path_nodes]
    )
    return np.multiply.reduceat(per_step, tree.code_offsets[:-1])


def hs_loss_and_grads(node_vectors, tree: HuffmanTree, h, word_index: int):
    """Negative log hierarchical-softmax likelihood and its gradients.

    Returns (loss, grad_h, node_grads) where node_grads is a list of
    (internal node index, gradient wrt that node vector).
    """
    _check_word(tree, word_index)
    h = np.asarray(h)
    path = tree.paths[word_index]
    code = tree.codes[word_index]
    if len(path) == 0:
        return 0.0, np.zeros_like(h), []
    z = node_vectors[path] @ h
    sig = sigmoid(z)
    # loss = -sum log sigma(sign*z); d loss / dz = sigma(z) - bit
    g = sig - code.astype(h.dtype)
    loss = -float(np.sum(np.where(code == 1, np.log(sig), np.log1p(-sig))))
    grad_h = g @ node_vectors[path]
    node_grads = [(int(n), g[k] * h) for k, n in enumerate(path)]
    return loss, grad_h, node_grads
