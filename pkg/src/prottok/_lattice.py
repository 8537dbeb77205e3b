"""Inner loops for sub-word encoding and segmentation lattices.

All heavy per-residue work lives here: BPE merge application, substring
counting, lattice forward/backward with expected counts, leave-one-out
pruning scores and Viterbi segmentation.  Functions are JIT-compiled with
numba when available and run as plain Python otherwise (same code, same
operation order, so results are identical either way).

Pieces are addressed by packed integer keys: each of the 28 single-character
codes occupies 5 bits, first character most significant, so any piece of up
to 12 characters fits a signed 64-bit key.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
    from numba.core import types
    from numba.typed import Dict as _TypedDict

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


NEG_INF = -np.inf
MAX_PACKED_LEN = 12
KEY_BASE = 32


def new_int_dict():
    """int64 -> int64 mapping usable from both compiled and plain code."""
    if HAVE_NUMBA:
        return _TypedDict.empty(types.int64, types.int64)
    return {}


def pack_piece(codes) -> int:
    """Packed key of a piece given its character codes (0..27)."""
    key = 0
    for c in codes:
        key = key * KEY_BASE + int(c) + 1
    return key


@njit(cache=True)
def _logadd(a, b):
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + np.log1p(np.exp(b - a))


# ---------------------------------------------------------------------------
# BPE merge application (heap over merge ranks, leftmost-first within a rank)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _heap_push(heap, size, val):
    heap[size] = val
    i = size
    while i > 0:
        parent = (i - 1) // 2
        if heap[parent] <= heap[i]:
            break
        heap[parent], heap[i] = heap[i], heap[parent]
        i = parent
    return size + 1


@njit(cache=True)
def _heap_pop(heap, size):
    top = heap[0]
    size -= 1
    heap[0] = heap[size]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        smallest = i
        if left < size and heap[left] < heap[smallest]:
            smallest = left
        if right < size and heap[right] < heap[smallest]:
            smallest = right
        if smallest == i:
            break
        heap[smallest], heap[i] = heap[i], heap[smallest]
        i = smallest
    return top, size


@njit(cache=True)
def bpe_apply_merges(ids, pair_rank, rank_new_id):
    """Apply ranked merges to a symbol-id array, earliest rank first and
    leftmost occurrence first within a rank.

    `pair_rank` maps (left_id << 21 | right_id) to merge rank and
    `rank_new_id[rank]` is the merged symbol's id.
    """
    n = ids.size
    if n < 2:
        return ids.copy()
    out_ids = ids.copy()
    nxt = np.empty(n, np.int64)
    prv = np.empty(n, np.int64)
    alive = np.ones(n, np.uint8)
    for i in range(n):
        nxt[i] = i + 1 if i + 1 < n else -1
        prv[i] = i - 1
    stride = np.int64(n)
    heap = np.empty(3 * n + 4, np.int64)
    size = 0
    for i in range(n - 1):
        key = (out_ids[i] << 21) | out_ids[i + 1]
        if key in pair_rank:
            size = _heap_push(heap, size, pair_rank[key] * stride + i)
    while size > 0:
        top, size = _heap_pop(heap, size)
        rank = top // stride
        pos = top % stride
        if alive[pos] == 0:
            continue
        j = nxt[pos]
        if j == -1:
            continue
        key = (out_ids[pos] << 21) | out_ids[j]
        if key not in pair_rank or pair_rank[key] != rank:
            continue
        out_ids[pos] = rank_new_id[rank]
        alive[j] = 0
        n2 = nxt[j]
        nxt[pos] = n2
        if n2 != -1:
            prv[n2] = pos
            key = (out_ids[pos] << 21) | out_ids[n2]
            if key in pair_rank:
                size = _heap_push(heap, size, pair_rank[key] * stride + pos)
        p = prv[pos]
        if p != -1:
            key = (out_ids[p] << 21) | out_ids[pos]
            if key in pair_rank:
                size = _heap_push(heap, size, pair_rank[key] * stride + p)
    count = 0
    for i in range(n):
        if alive[i]:
            count += 1
    result = np.empty(count, np.int64)
    k = 0
    for i in range(n):
        if alive[i]:
            result[k] = out_ids[i]
            k += 1
    return result


# ---------------------------------------------------------------------------
# Substring counting for unigram seeding
# ---------------------------------------------------------------------------


@njit(cache=True)
def count_substrings(codes, offsets, max_len, counts):
    """Count every substring of length 2..max_len (overlapping occurrences
    included) into the packed-key dict `counts`."""
    for s in range(offsets.size - 1):
        start = offsets[s]
        end = offsets[s + 1]
        for t in range(start + 2, end + 1):
            key = np.int64(codes[t - 1]) + 1
            key = (np.int64(codes[t - 2]) + 1) * KEY_BASE + key
            if key in counts:
                counts[key] += 1
            else:
                counts[key] = 1
            p32 = np.int64(KEY_BASE) * KEY_BASE
            for k in range(3, max_len + 1):
                u = t - k
                if u < start:
                    break
                key = (np.int64(codes[u]) + 1) * p32 + key
                p32 *= KEY_BASE
                if key in counts:
                    counts[key] += 1
                else:
                    counts[key] = 1


@njit(cache=True)
def export_counts(counts, keys, vals, lens):
    i = 0
    for key in counts:
        keys[i] = key
        vals[i] = counts[key]
        n = 0
        k = key
        while k > 0:
            k //= KEY_BASE
            n += 1
        lens[i] = n
        i += 1


# ---------------------------------------------------------------------------
# Unigram lattice: forward/backward, expected counts, leave-one-out, Viterbi
# ---------------------------------------------------------------------------


@njit(cache=True)
def _forward(codes, start, end, piece_of_key, piece_logp, max_len, alpha, skip_piece):
    """Fill alpha[0..L] for one sequence, optionally skipping one piece."""
    L = end - start
    alpha[0] = 0.0
    for t in range(1, L + 1):
        acc = NEG_INF
        key = np.int64(0)
        p32 = np.int64(1)
        for k in range(1, min(max_len, t) + 1):
            u = t - k
            key = (np.int64(codes[start + u]) + 1) * p32 + key
            p32 *= KEY_BASE
            if key in piece_of_key:
                p = piece_of_key[key]
                if p != skip_piece:
                    acc = _logadd(acc, alpha[u] + piece_logp[p])
        alpha[t] = acc
    return alpha[L]


@njit(cache=True)
def _backward(codes, start, end, piece_of_key, piece_logp, max_len, beta):
    L = end - start
    beta[L] = 0.0
    for t in range(L - 1, -1, -1):
        acc = NEG_INF
        key = np.int64(0)
        for k in range(1, min(max_len, L - t) + 1):
            key = key * KEY_BASE + np.int64(codes[start + t + k - 1]) + 1
            if key in piece_of_key:
                acc = _logadd(acc, beta[t + k] + piece_logp[piece_of_key[key]])
        beta[t] = acc


@njit(cache=True)
def em_pass(codes, offsets, piece_of_key, piece_logp, max_len, counts):
    """One E-step over the corpus.

    Accumulates expected piece counts into `counts` (fixed iteration order:
    sequences ascending, positions ascending, lengths ascending) and returns
    the corpus log-likelihood under the current probabilities.
    """
    total_ll = 0.0
    n_seq = offsets.size - 1
    for s in range(n_seq):
        start = offsets[s]
        end = offsets[s + 1]
        L = end - start
        alpha = np.empty(L + 1, np.float64)
        beta = np.empty(L + 1, np.float64)
        log_z = _forward(codes, start, end, piece_of_key, piece_logp, max_len, alpha, -1)
        _backward(codes, start, end, piece_of_key, piece_logp, max_len, beta)
        total_ll += log_z
        for t in range(1, L + 1):
            key = np.int64(0)
            p32 = np.int64(1)
            for k in range(1, min(max_len, t) + 1):
                u = t - k
                key = (np.int64(codes[start + u]) + 1) * p32 + key
                p32 *= KEY_BASE
                if key in piece_of_key:
                    p = piece_of_key[key]
                    counts[p] += np.exp(alpha[u] + piece_logp[p] + beta[t] - log_z)
    return total_ll


@njit(cache=True)
def corpus_log_likelihood(codes, offsets, piece_of_key, piece_logp, max_len):
    total_ll = 0.0
    for s in range(offsets.size - 1):
        start = offsets[s]
        end = offsets[s + 1]
        alpha = np.empty(end - start + 1, np.float64)
        total_ll += _forward(codes, start, end, piece_of_key, piece_logp, max_len, alpha, -1)
    return total_ll


@njit(cache=True)
def loo_losses(codes, offsets, piece_of_key, piece_logp, piece_len, max_len, n_pieces):
    """Exact corpus log-likelihood loss from removing each piece.

    For sequences containing a piece exactly once the loss term follows from
    the stored forward/backward values; sequences with repeats re-run the
    forward pass with the piece's edges skipped.
    """
    n_seq = offsets.size - 1
    total = offsets[n_seq]
    # Forward/backward tables for every sequence.
    aoff = np.empty(n_seq + 1, np.int64)
    aoff[0] = 0
    for s in range(n_seq):
        aoff[s + 1] = aoff[s] + (offsets[s + 1] - offsets[s]) + 1
    alpha_all = np.empty(total + n_seq, np.float64)
    beta_all = np.empty(total + n_seq, np.float64)
    log_z = np.empty(n_seq, np.float64)
    for s in range(n_seq):
        start = offsets[s]
        end = offsets[s + 1]
        log_z[s] = _forward(
            codes, start, end, piece_of_key, piece_logp, max_len,
            alpha_all[aoff[s] : aoff[s + 1]], -1,
        )
        _backward(
            codes, start, end, piece_of_key, piece_logp, max_len,
            beta_all[aoff[s] : aoff[s + 1]],
        )
    # Occurrence index: for each piece, the sequences that contain it; a
    # sequence is stored with the occurrence start when the piece occurs
    # exactly once, or with start -1 when a full re-pass is needed.
    entry_count = np.zeros(n_pieces, np.int64)
    last_seq = np.full(n_pieces, -1, np.int64)
    for s in range(n_seq):
        start = offsets[s]
        end = offsets[s + 1]
        L = end - start
        for t in range(1, L + 1):
            key = np.int64(0)
            p32 = np.int64(1)
            for k in range(1, min(max_len, t) + 1):
                key = (np.int64(codes[start + t - k]) + 1) * p32 + key
                p32 *= KEY_BASE
                if key in piece_of_key:
                    p = piece_of_key[key]
                    if last_seq[p] != s:
                        last_seq[p] = s
                        entry_count[p] += 1
    ptr = np.empty(n_pieces + 1, np.int64)
    ptr[0] = 0
    for p in range(n_pieces):
        ptr[p + 1] = ptr[p] + entry_count[p]
    occ_seq = np.empty(ptr[n_pieces], np.int64)
    occ_start = np.empty(ptr[n_pieces], np.int64)
    fill = ptr[:n_pieces].copy()
    last_seq[:] = -1
    for s in range(n_seq):
        start = offsets[s]
        end = offsets[s + 1]
        L = end - start
        for t in range(1, L + 1):
            key = np.int64(0)
            p32 = np.int64(1)
            for k in range(1, min(max_len, t) + 1):
                key = (np.int64(codes[start + t - k]) + 1) * p32 + key
                p32 *= KEY_BASE
                if key in piece_of_key:
                    p = piece_of_key[key]
                    if last_seq[p] != s:
                        last_seq[p] = s
                        occ_seq[fill[p]] = s
                        occ_start[fill[p]] = t - k
                        fill[p] += 1
                    else:
                        occ_start[fill[p] - 1] = -1
    losses = np.zeros(n_pieces, np.float64)
    for p in range(n_pieces):
        loss = 0.0
        for e in range(ptr[p], ptr[p + 1]):
            s = occ_seq[e]
            u = occ_start[e]
            recompute = u < 0
            if not recompute:
                a = alpha_all[aoff[s] + u]
                b = beta_all[aoff[s] + u + piece_len[p]]
                ratio = a + piece_logp[p] + b - log_z[s]
                if ratio > -1e-12:
                    recompute = True
                else:
                    loss -= np.log1p(-np.exp(ratio))
            if recompute:
                start = offsets[s]
                end = offsets[s + 1]
                scratch = np.empty(end - start + 1, np.float64)
                z_without = _forward(
                    codes, start, end, piece_of_key, piece_logp, max_len, scratch, p
                )
                loss += log_z[s] - z_without
        losses[p] = loss
    return losses


@njit(cache=True)
def viterbi_path(codes, piece_of_key, piece_logp, lex_rank, max_len):
    """Maximum-log-probability segmentation of one sequence.

    Ties break toward fewer tokens, then toward the path whose piece list is
    lexicographically smallest at the earliest divergence (`lex_rank` orders
    piece indices by piece string).  Returns piece indices, or an empty array
    when no segmentation exists.
    """
    L = codes.size
    best = np.full(L + 1, NEG_INF, np.float64)
    tokens = np.zeros(L + 1, np.int64)
    bp_len = np.zeros(L + 1, np.int64)
    bp_piece = np.full(L + 1, -1, np.int64)
    best[0] = 0.0
    path_a = np.empty(L, np.int64)
    path_b = np.empty(L, np.int64)
    for t in range(1, L + 1):
        key = np.int64(0)
        p32 = np.int64(1)
        for k in range(1, min(max_len, t) + 1):
            u = t - k
            key = (np.int64(codes[u]) + 1) * p32 + key
            p32 *= KEY_BASE
            if key not in piece_of_key:
                continue
            p = piece_of_key[key]
            if best[u] == NEG_INF:
                continue
            cand = best[u] + piece_logp[p]
            if cand > best[t]:
                take = True
            elif cand < best[t]:
                take = False
            else:
                cand_tokens = tokens[u] + 1
                if cand_tokens != tokens[t]:
                    take = cand_tokens < tokens[t]
                else:
                    # Exact score and token-count tie: compare full paths.
                    na = _walk(t, bp_len, bp_piece, path_a)
                    nb = _walk(u, bp_len, bp_piece, path_b)
                    path_b[nb] = p
                    nb += 1
                    take = False
                    for i in range(na):
                        ra = lex_rank[path_a[i]]
                        rb = lex_rank[path_b[i]]
                        if rb != ra:
                            take = rb < ra
                            break
            if take:
                best[t] = cand
                tokens[t] = tokens[u] + 1
                bp_len[t] = k
                bp_piece[t] = p
    if best[L] == NEG_INF:
        return np.empty(0, np.int64)
    out = np.empty(tokens[L], np.int64)
    _walk(L, bp_len, bp_piece, out)
    return out


@njit(cache=True)
def _walk(t, bp_len, bp_piece, out):
    """Reconstruct the piece-index path ending at node t, in forward order."""
    n = 0
    pos = t
    while pos > 0:
        out[n] = bp_piece[pos]
        n += 1
        pos -= bp_len[pos]
    lo = 0
    hi = n - 1
    while lo < hi:
        out[lo], out[hi] = out[hi], out[lo]
        lo += 1
        hi -= 1
    return n
