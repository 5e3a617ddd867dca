"""Two-layer masked self-attention and the explicit bigram-table circuit.

The forward pass implements score
``A[i,j] = (z_i^T W_Q + r_{i-j+1}^T) W_K z_j / sqrt(d)`` with causal
masking, per-layer residual connections, second-layer head concatenation
and a final linear read-out.  ``build_bigram_extractor`` instantiates the
hand-set weights whose head ``v`` averages the successors of token ``v``
over the sequence: with saturation constant ``c`` large, the last output
row reshapes to the empirical conditional table p(next | previous).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .markov import TokenSequence, generate_sequence, ngram_counts, sample_chain
from .numerics import Rng

__all__ = [
    "AttentionHead",
    "AttentionStack",
    "ConditionalTable",
    "ConstructionReport",
    "attention_forward",
    "build_bigram_extractor",
    "verify_construction",
]


@dataclass(frozen=True)
class AttentionHead:
    """One attention head; rel_pos rows are r_1, r_2, ... (offset k = i - j + 1).

    Offsets beyond the stored rows contribute zero; rel_pos=None means no
    relative positional term at all.
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    rel_pos: np.ndarray | None = None

    def __post_init__(self):
        d = self.w_q.shape[0]
        for name in ("w_q", "w_k", "w_v"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            if m.shape != (d, d):
                raise DomainError(f"{name} must be {d}x{d}")
            object.__setattr__(self, name, m)
        if self.rel_pos is not None:
            r = np.asarray(self.rel_pos, dtype=np.float64)
            if r.ndim != 2 or r.shape[1] != d:
                raise DomainError("rel_pos must have one length-d row per offset")
            object.__setattr__(self, "rel_pos", r)


@dataclass(frozen=True)
class AttentionStack:
    """Embeddings, one first-layer head, V second-layer heads, and the read-out.

    embed_dim is pinned to 3 * vocab_size and w_out maps the concatenated
    second-layer outputs (d * V) to V**2 logits per position.
    """

    vocab_size: int
    embed_dim: int
    embedding: np.ndarray
    layer1: AttentionHead
    layer2: tuple
    w_out: np.ndarray
    saturation: float

    def __post_init__(self):
        v, d = self.vocab_size, self.embed_dim
        if d != 3 * v:
            raise DomainError(f"embed_dim must equal 3*vocab_size = {3 * v}")
        if self.embedding.shape != (v, d):
            raise DomainError(f"embedding must be {v}x{d}")
        if len(self.layer2) != v:
            raise DomainError(f"layer 2 must have exactly {v} heads")
        if self.w_out.shape != (v * v, d * v):
            raise DomainError(f"w_out must be {v * v}x{d * v}")
        if not self.saturation > 0.0:
            raise DomainError("saturation constant must be positive")
        object.__setattr__(self, "layer2", tuple(self.layer2))


@dataclass(frozen=True)
class ConditionalTable:
    """V x V table with entry (v, u) = p(u | v)."""

    probs: np.ndarray


@dataclass(frozen=True)
class ConstructionReport:
    """Verification outcome: worst entry error over the compared table rows."""

    max_abs_error: float
    table: ConditionalTable
    excluded_rows: tuple


def attention_scores(z: np.ndarray, head: AttentionHead) -> np.ndarray:
    """Masked pre-softmax score matrix for one head (lower triangle finite)."""
    n, d = z.shape
    scores = (z @ head.w_q) @ (head.w_k @ z.T) / math.sqrt(d)
    if head.rel_pos is not None:
        kz = head.w_k @ z.T  # (d, n)
        n_offsets = min(head.rel_pos.shape[0], n)
        rel = head.rel_pos[:n_offsets] @ kz / math.sqrt(d)  # row o-1 = r_o . (W_K z_j)
        for offset in range(n_offsets):  # offset = i - j
            cols = np.arange(n - offset)
            scores[cols + offset, cols] += rel[offset, cols]
    scores[np.triu_indices(n, k=1)] = -math.inf
    return scores


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


def _head_output(z: np.ndarray, head: AttentionHead) -> np.ndarray:
    return _softmax_rows(attention_scores(z, head)) @ (z @ head.w_v)


def attention_forward(stack: AttentionStack, seq: TokenSequence) -> np.ndarray:
    """Full forward pass; returns the (T, V**2) read-out, last row is the table."""
    if seq.vocab_size > stack.vocab_size or (
        len(seq) and int(seq.tokens.max()) >= stack.vocab_size
    ):
        raise DomainError("sequence tokens must lie in the stack's vocabulary")
    z0 = stack.embedding[seq.tokens]
    z1 = z0 + _head_output(z0, stack.layer1)
    heads = [z1 + _head_output(z1, head) for head in stack.layer2]
    return np.concatenate(heads, axis=1) @ stack.w_out.T


def build_bigram_extractor(vocab_size: int, c: float = 40.0) -> AttentionStack:
    """Hand-set weights whose final row holds all empirical next-token conditionals.

    Layer 1 puts score c on the immediately preceding position via the
    relative positional term (the first position can only attend to itself).
    Second-layer head v scores c on every position whose predecessor is v and
    value-averages the successors' one-hot codes; the read-out w_out is block
    diagonal in the projection that reads the third V-block of each head.
    The weight constants absorb sqrt(d) so realized scores are exactly
    {0, c} after the 1/sqrt(d) scaling.
    """
    if vocab_size < 2:
        raise DomainError("vocab_size must be >= 2")
    if not c > 0.0:
        raise DomainError("saturation constant must be positive")
    v = vocab_size
    d = 3 * v
    sqrt_d = math.sqrt(d)
    eye = np.eye(v)

    embedding = np.concatenate([eye, eye, np.zeros((v, v))], axis=1)

    w_k1 = np.zeros((d, d))
    w_k1[:v, :v] = c * sqrt_d * eye
    w_v1 = np.zeros((d, d))
    w_v1[v : 2 * v, v : 2 * v] = eye
    rel = np.zeros((2, d))
    rel[1, :] = 1.0  # r_2 = all-ones: only the previous position is keyed
    layer1 = AttentionHead(np.zeros((d, d)), w_k1, w_v1, rel)

    heads = []
    for tok in range(v):
        basis = eye[tok]
        w_q = np.zeros((d, d))
        w_q[v : 2 * v, v : 2 * v] = np.outer(np.ones(v), basis)
        w_k = np.zeros((d, d))
        w_k[v : 2 * v, :v] = -(c * sqrt_d / 2.0) * np.outer(basis, basis)
        w_k[v : 2 * v, v : 2 * v] = (c * sqrt_d / 2.0) * np.outer(basis, basis)
        w_v = np.zeros((d, d))
        w_v[:v, 2 * v :] = eye
        heads.append(AttentionHead(w_q, w_k, w_v, None))

    w_out = np.zeros((v * v, d * v))
    for tok in range(v):
        w_out[tok * v : (tok + 1) * v, tok * d + 2 * v : (tok + 1) * d] = eye

    return AttentionStack(v, d, embedding, layer1, tuple(heads), w_out, float(c))


def verify_construction(
    rng: Rng,
    vocab_size: int,
    length: int,
    c: float = 40.0,
    seq: TokenSequence | None = None,
) -> ConstructionReport:
    """Run the circuit on a sequence and compare against counted conditionals.

    With no sequence given, one is generated from a random order-1 chain.
    The first position has no predecessor and attends to itself, which leaks
    one phantom (first token -> first token) transition into that token's
    head; that row is excluded from the error, as are rows for tokens that
    never occur as a predecessor (their attention is uniform noise).  Both
    exclusions are recorded in the report.
    """
    if length < 3:
        raise DomainError("length must be >= 3")
    if seq is None:
        chain = sample_chain(rng, order=1, vocab=vocab_size, alpha=1.0)
        seq = generate_sequence(rng, chain, length)
    stack = build_bigram_extractor(vocab_size, c)
    output = attention_forward(stack, seq)
    table = output[-1].reshape(vocab_size, vocab_size).copy()

    # The residual enters each head's read block through the third V-block of
    # z'_T, which the construction pins to zero; reconstruct and subtract it
    # so the no-op is asserted rather than assumed.
    residual_read = stack.embedding[int(seq.tokens[-1])][2 * vocab_size :]
    if np.any(residual_read != 0.0):
        raise AssertionError("construction residual leaked into the read block")
    table -= residual_read

    stats = ngram_counts(seq, 1)
    first_token = int(seq.tokens[0])
    excluded = []
    max_err = 0.0
    compared = False
    for tok in range(vocab_size):
        row = stats.row((tok,)).astype(np.float64)
        total = row.sum()
        if total == 0.0 or tok == first_token:
            excluded.append(tok)
            continue
        compared = True
        max_err = max(max_err, float(np.abs(table[tok] - row / total).max()))
    if not compared:
        max_err = math.nan
    return ConstructionReport(max_err, ConditionalTable(table), tuple(excluded))
