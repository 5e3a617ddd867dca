"""Fixed-order Markov-chain tasks and order selection.

Random chains with Dirichlet rows, empirical n-gram statistics, exact
Dirichlet-multinomial and BIC-approximate log evidence, order posteriors,
and the posterior-mixture next-token predictor.  Sequences start with
``order`` uniform tokens, and that uniform prefix contributes
``order * ln(1/V)`` to both the exact and the BIC evidence so that
different orders stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, UnseenContextError
from .numerics import (
    Distribution,
    PosteriorReport,
    Rng,
    make_posterior_report,
    uniform_distribution,
)

__all__ = [
    "TokenSequence",
    "MarkovProcess",
    "NGramStats",
    "PosteriorReport",
    "sample_chain",
    "lift_order",
    "generate_sequence",
    "ngram_counts",
    "predict_ngram",
    "log_marginal_exact",
    "log_marginal_bic",
    "bic_complexity_penalty",
    "order_posterior",
    "bayes_predict",
]


@dataclass(frozen=True)
class TokenSequence:
    """Integer token stream over the vocabulary [0, vocab_size)."""

    tokens: np.ndarray
    vocab_size: int

    def __post_init__(self):
        toks = np.asarray(self.tokens, dtype=np.int64)
        if toks.ndim != 1:
            raise DomainError("tokens must be a 1-D vector")
        if self.vocab_size < 1:
            raise DomainError("vocab_size must be >= 1")
        if toks.size and (toks.min() < 0 or toks.max() >= self.vocab_size):
            raise DomainError("tokens must lie in [0, vocab_size)")
        toks = toks.copy()
        toks.flags.writeable = False
        object.__setattr__(self, "tokens", toks)

    def __len__(self) -> int:
        return int(self.tokens.size)


@dataclass(frozen=True)
class MarkovProcess:
    """Order-s chain over [V]: V**s row-stochastic rows, one per length-s context.

    Row index for context (c_1, ..., c_s), oldest symbol first, is
    sum_i c_i * V**(s-1-i).
    """

    order: int
    vocab_size: int
    transitions: np.ndarray

    def __post_init__(self):
        if self.order < 1:
            raise DomainError("order must be >= 1")
        if self.vocab_size < 2:
            raise DomainError("vocab_size must be >= 2")
        table = np.asarray(self.transitions, dtype=np.float64)
        expected = (self.vocab_size**self.order, self.vocab_size)
        if table.shape != expected:
            raise DomainError(f"transition table must have shape {expected}, got {table.shape}")
        if np.any(table < 0.0) or not np.isfinite(table).all():
            raise DomainError("transition probabilities must be finite and non-negative")
        if np.max(np.abs(table.sum(axis=1) - 1.0)) > 1e-12:
            raise DomainError("every transition row must sum to 1 within 1e-12")
        table = table.copy()
        table.flags.writeable = False
        object.__setattr__(self, "transitions", table)

    def row(self, context) -> np.ndarray:
        return self.transitions[encode_context(context, self.vocab_size)]


def encode_context(context, vocab_size: int) -> int:
    """Map a length-s context (oldest first) to its row index."""
    idx = 0
    for tok in context:
        idx = idx * vocab_size + int(tok)
    return idx


@dataclass(frozen=True)
class NGramStats:
    """Sliding-window transition counts for one order.

    ``transition_counts`` maps each observed length-s context tuple to a
    length-V count vector; context totals are the row sums, so
    sum_v transition_counts[ctx][v] == context_counts[ctx] exactly.
    """

    order: int
    vocab_size: int
    transition_counts: dict

    @property
    def context_counts(self) -> dict:
        return {ctx: int(row.sum()) for ctx, row in self.transition_counts.items()}

    def row(self, context) -> np.ndarray:
        return self.transition_counts.get(tuple(int(t) for t in context), np.zeros(self.vocab_size, dtype=np.int64))


def sample_chain(rng: Rng, order: int, vocab: int, alpha: float = 1.0) -> MarkovProcess:
    """Draw a random order-s chain: V**s rows, each ~ Dirichlet(alpha * ones(V))."""
    if order < 1 or vocab < 2:
        raise DomainError("require order >= 1 and vocab >= 2")
    if not alpha > 0.0:
        raise DomainError("alpha must be positive")
    rows = rng.gen.dirichlet(np.full(vocab, float(alpha)), size=vocab**order)
    rows = rows / rows.sum(axis=1, keepdims=True)
    return MarkovProcess(order, vocab, rows)


def lift_order(chain: MarkovProcess, order: int) -> MarkovProcess:
    """Represent a chain inside a higher order by repeating rows over extended contexts."""
    if order < chain.order:
        raise DomainError("target order must be >= the chain's order")
    if order == chain.order:
        return chain
    v, s = chain.vocab_size, chain.order
    reps = v ** (order - s)
    # context index is big-endian oldest-first, so the trailing s symbols of a
    # lifted context are its index modulo V**s; tiling preserves that.
    lifted = np.tile(chain.transitions, (reps, 1))
    return MarkovProcess(order, v, lifted)


def generate_sequence(rng: Rng, chain: MarkovProcess, length: int) -> TokenSequence:
    """Sample a sequence: first s tokens i.i.d. uniform, then chain transitions."""
    s, v = chain.order, chain.vocab_size
    if length < s:
        raise DomainError(f"length must be >= order ({s}), got {length}")
    tokens = np.empty(length, dtype=np.int64)
    tokens[:s] = rng.gen.integers(0, v, size=s)
    if length > s:
        cumulative = np.cumsum(chain.transitions, axis=1)
        draws = rng.gen.random(length - s)
        idx = encode_context(tokens[:s], v)
        modulus = v**s
        for t in range(s, length):
            tokens[t] = np.searchsorted(cumulative[idx], draws[t - s], side="right")
            idx = (idx * v + int(tokens[t])) % modulus
    return TokenSequence(tokens, v)


def ngram_counts(seq: TokenSequence, order: int) -> NGramStats:
    """Count all length-(order+1) sliding windows; no smoothing."""
    if order < 1:
        raise DomainError("order must be >= 1")
    if len(seq) <= order:
        raise DomainError(f"sequence of length {len(seq)} has no order-{order} windows")
    toks, v = seq.tokens, seq.vocab_size
    powers = v ** np.arange(order - 1, -1, -1, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(toks, order)[:-1]
    ctx_codes = windows @ powers
    successors = toks[order:]
    dense = np.zeros((v**order, v), dtype=np.int64)
    np.add.at(dense, (ctx_codes, successors), 1)
    counts = {}
    for code in np.unique(ctx_codes):
        ctx = _decode_context(int(code), v, order)
        counts[ctx] = dense[code].copy()
    return NGramStats(order, v, counts)


def _decode_context(code: int, vocab: int, order: int) -> tuple:
    out = []
    for _ in range(order):
        out.append(code % vocab)
        code //= vocab
    return tuple(reversed(out))


def predict_ngram(seq: TokenSequence, order: int, smoothing: str = "add_one") -> Distribution:
    """Next-token law from the order-s statistics at the final context.

    "raw" divides transition counts by the context count and fails with
    UnseenContextError when the final context was never continued; "add_one"
    returns (count+1)/(total+V), the posterior-mean predictor under a flat
    Dirichlet prior, and never fails.
    """
    if smoothing not in ("raw", "add_one"):
        raise DomainError(f"smoothing must be 'raw' or 'add_one', got {smoothing!r}")
    if order < 1 or len(seq) < order:
        raise DomainError(f"need at least {order} tokens of context, got {len(seq)}")
    v = seq.vocab_size
    context = tuple(int(t) for t in seq.tokens[len(seq) - order:])
    if len(seq) > order:
        counts = ngram_counts(seq, order).row(context).astype(np.float64)
    else:
        counts = np.zeros(v, dtype=np.float64)
    total = float(counts.sum())
    if smoothing == "raw":
        if total == 0.0:
            raise UnseenContextError(f"context {context} has no observed continuation")
        return Distribution(counts / total)
    return Distribution((counts + 1.0) / (total + v))


def log_marginal_exact(seq: TokenSequence, order: int) -> float:
    """Exact log evidence ln p(X | order) under flat Dirichlet rows.

    Uniform prefix term order*ln(1/V) plus, per observed context,
    ln G(V) - ln G(V + n_ctx) + sum_v ln G(1 + n_ctx_v).  A sequence exactly
    as long as the order has no transition windows and scores the prefix
    term alone.
    """
    if order < 1 or len(seq) < order:
        raise DomainError(f"sequence of length {len(seq)} cannot have order {order}")
    v = seq.vocab_size
    total = -order * math.log(v)
    if len(seq) == order:
        return total
    stats = ngram_counts(seq, order)
    rows = np.array([row for row in stats.transition_counts.values()], dtype=np.float64)
    if rows.size:
        row_totals = rows.sum(axis=1)
        total += float(
            (gammaln(v) - gammaln(v + row_totals)).sum() + gammaln(1.0 + rows).sum()
        )
    return total


def bic_complexity_penalty(vocab: int, order: int, length: int) -> float:
    """(V**s (V-1)/2) * ln T, the free-parameter penalty of the Laplace approximation."""
    if length < 1:
        raise DomainError("length must be >= 1")
    return (vocab**order) * (vocab - 1) / 2.0 * math.log(length)


def log_marginal_bic(seq: TokenSequence, order: int) -> float:
    """BIC approximation of the log evidence.

    Maximized empirical log likelihood sum_{t>s} ln n(ctx,x_t)/n(ctx) minus
    the complexity penalty, plus the same uniform prefix term as the exact
    form (the empirical sum necessarily starts at t = s+1).
    """
    if len(seq) <= order:
        raise DomainError(f"sequence of length {len(seq)} is degenerate for order {order}")
    stats = ngram_counts(seq, order)
    v = seq.vocab_size
    empirical = 0.0
    for row in stats.transition_counts.values():
        observed = row[row > 0].astype(np.float64)
        empirical += float(np.sum(observed * (np.log(observed) - math.log(float(row.sum())))))
    prefix = -order * math.log(v)
    return prefix + empirical - bic_complexity_penalty(v, order, len(seq))


_MARGINALS = {"exact": log_marginal_exact, "bic": log_marginal_bic}


def order_posterior(
    seq: TokenSequence,
    orders,
    prior: Distribution | None = None,
    method: str = "exact",
) -> PosteriorReport:
    """Posterior over chain orders: p(s|X) proportional to p(X|s) * prior(s)."""
    orders = tuple(int(s) for s in orders)
    if not orders:
        raise DomainError("orders must be non-empty")
    if method not in _MARGINALS:
        raise DomainError(f"method must be one of {sorted(_MARGINALS)}, got {method!r}")
    if prior is None:
        prior = uniform_distribution(len(orders))
    marginal = _MARGINALS[method]
    logs = np.array([marginal(seq, s) for s in orders])
    return make_posterior_report(orders, logs, prior)


def bayes_predict(
    seq: TokenSequence,
    orders,
    prior: Distribution | None = None,
    method: str = "exact",
) -> Distribution:
    """Posterior-mixture next-token law: sum_s p(s|X) * smoothed order-s predictor."""
    report = order_posterior(seq, orders, prior, method)
    mixture = np.zeros(seq.vocab_size)
    for weight, s in zip(report.posterior.probs, report.hypotheses):
        mixture += weight * predict_ngram(seq, s, "add_one").probs
    return Distribution(mixture / mixture.sum())
