"""Numba-compiled training kernel.

Replicates the per-position update of trainer.word_step and the source
softmax update of trainer.structural_step over the whole corpus, operating
on flattened int/float32 arrays. Single-threaded and seeded, so a run is
bit-reproducible for a given (corpus, config, seed).
"""

import numpy as np
from numba import njit

SIGMOID_CLAMP = 30.0


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x > SIGMOID_CLAMP:
        x = SIGMOID_CLAMP
    elif x < -SIGMOID_CLAMP:
        x = -SIGMOID_CLAMP
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def _structural_update(U, s, nbr_flat, nbr_off, lr, z, coef):
    d = U.shape[1]
    S = U.shape[0]
    u_s = U[s].copy()
    for e in range(nbr_off[s], nbr_off[s + 1]):
        sp = nbr_flat[e]
        # z_j = U[j] . U[s], softmax over all sources
        zmax = -1e30
        for j in range(S):
            acc = 0.0
            for c in range(d):
                acc += U[j, c] * u_s[c]
            z[j] = acc
            if acc > zmax:
                zmax = acc
        denom = 0.0
        for j in range(S):
            z[j] = np.exp(z[j] - zmax)
            denom += z[j]
        for j in range(S):
            coef[j] = z[j] / denom
        coef[sp] -= 1.0
        # grad wrt U[s] through every z_j, using pre-update rows
        gs = np.zeros(d, dtype=np.float32)
        for j in range(S):
            for c in range(d):
                gs[c] += coef[j] * U[j, c]
        for j in range(S):
            for c in range(d):
                U[j, c] -= lr * coef[j] * u_s[c]
        for c in range(d):
            U[s, c] -= lr * gs[c]
        for c in range(d):
            u_s[c] = U[s, c]


@njit(cache=True)
def train_kernel(
    W_in,
    U,
    W_node,
    tokens,
    doc_offsets,
    tag_flat,
    tag_offsets,
    code_bits,
    code_offsets,
    path_nodes,
    window,
    epochs,
    lr_start,
    lr_end,
    total_steps,
    holdout_period,
    holdout_offset,
    structured,
    structural_period,
    nbr_flat,
    nbr_off,
    seed,
):
    np.random.seed(seed)
    d = W_in.shape[1]
    n_docs = doc_offsets.shape[0] - 1
    S = U.shape[0]

    h = np.zeros(d, dtype=np.float32)
    grad_h = np.zeros(d, dtype=np.float32)
    z_buf = np.zeros(S, dtype=np.float64)
    coef_buf = np.zeros(S, dtype=np.float64)

    step = 0
    doc_counter = 0
    for _epoch in range(epochs):
        for di in range(n_docs):
            start = doc_offsets[di]
            end = doc_offsets[di + 1]
            n_tags = tag_offsets[di + 1] - tag_offsets[di]
            for t in range(start, end):
                if holdout_period > 0 and t % holdout_period == holdout_offset:
                    continue
                lr = lr_start + (lr_end - lr_start) * step / total_steps
                step += 1
                r = np.random.randint(1, window + 1)
                lo = t - r
                if lo < start:
                    lo = start
                hi = t + r
                if hi > end - 1:
                    hi = end - 1
                n_ctx = hi - lo
                if n_ctx == 0:
                    continue
                n_contrib = n_ctx + n_tags
                for c in range(d):
                    h[c] = 0.0
                for j in range(lo, hi + 1):
                    if j == t:
                        continue
                    w = tokens[j]
                    for c in range(d):
                        h[c] += W_in[w, c]
                for e in range(tag_offsets[di], tag_offsets[di + 1]):
                    s = tag_flat[e]
                    for c in range(d):
                        h[c] += U[s, c]
                inv = 1.0 / n_contrib
                for c in range(d):
                    h[c] *= inv

                target = tokens[t]
                for c in range(d):
                    grad_h[c] = 0.0
                for k in range(code_offsets[target], code_offsets[target + 1]):
                    node = path_nodes[k]
                    acc = 0.0
                    for c in range(d):
                        acc += W_node[node, c] * h[c]
                    g = np.float32(_sigmoid(acc) - code_bits[k])
                    glr = lr * g
                    for c in range(d):
                        grad_h[c] += g * W_node[node, c]
                        W_node[node, c] -= glr * h[c]
                scale = lr * inv
                for c in range(d):
                    grad_h[c] *= scale
                for j in range(lo, hi + 1):
                    if j == t:
                        continue
                    w = tokens[j]
                    for c in range(d):
                        W_in[w, c] -= grad_h[c]
                for e in range(tag_offsets[di], tag_offsets[di + 1]):
                    s = tag_flat[e]
                    for c in range(d):
                        U[s, c] -= grad_h[c]

            if structured and doc_counter % structural_period == 0:
                lr = lr_start + (lr_end - lr_start) * step / total_steps
                for e in range(tag_offsets[di], tag_offsets[di + 1]):
                    _structural_update(
                        U, tag_flat[e], nbr_flat, nbr_off, lr, z_buf, coef_buf
                    )
            doc_counter += 1


@njit(cache=True)
def heldout_loss_kernel(
    W_in,
    U,
    W_node,
    tokens,
    doc_offsets,
    tag_flat,
    tag_offsets,
    code_bits,
    code_offsets,
    path_nodes,
    window,
    holdout_period,
    holdout_offset,
):
    """Mean HS loss over held-out contexts with the full (r = window) context."""
    d = W_in.shape[1]
    n_docs = doc_offsets.shape[0] - 1
    h = np.zeros(d, dtype=np.float32)
    total = 0.0
    count = 0
    for di in range(n_docs):
        start = doc_offsets[di]
        end = doc_offsets[di + 1]
        n_tags = tag_offsets[di + 1] - tag_offsets[di]
        for t in range(start, end):
            if holdout_period <= 0 or t % holdout_period != holdout_offset:
                continue
            lo = t - window
            if lo < start:
                lo = start
            hi = t + window
            if hi > end - 1:
                hi = end - 1
            n_ctx = hi - lo
            if n_ctx == 0:
                continue
            for c in range(d):
                h[c] = 0.0
            for j in range(lo, hi + 1):
                if j == t:
                    continue
                w = tokens[j]
                for c in range(d):
                    h[c] += W_in[w, c]
            for e in range(tag_offsets[di], tag_offsets[di + 1]):
                s = tag_flat[e]
                for c in range(d):
                    h[c] += U[s, c]
            inv = 1.0 / (n_ctx + n_tags)
            for c in range(d):
                h[c] *= inv
            target = tokens[t]
            loss = 0.0
            for k in range(code_offsets[target], code_offsets[target + 1]):
                node = path_nodes[k]
                acc = 0.0
                for c in range(d):
                    acc += W_node[node, c] * h[c]
                sig = _sigmoid(acc)
                if code_bits[k] == 1:
                    loss -= np.log(sig)
                else:
                    loss -= np.log(1.0 - sig)
            total += loss
            count += 1
    if count == 0:
        return 0.0
    return total / count
