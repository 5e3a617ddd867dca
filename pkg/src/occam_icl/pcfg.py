"""Two-letter probabilistic grammar family with a depth cap.

The start symbol rewrites to one of four two-letter block types
(ab, ba, aa, bb) followed by a continuation nonterminal that either opens
another block or emits an end-of-string marker; the simple subfamily pins
the probabilities of the repeated-letter blocks to exactly zero.  Token
encoding for serialization: a=0, b=1, eos=2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateSupportError, DomainError, SequenceParseError
from .markov import TokenSequence
from .numerics import (
    Distribution,
    PosteriorReport,
    Rng,
    make_posterior_report,
    uniform_distribution,
)

__all__ = [
    "A_TOK",
    "B_TOK",
    "EOS_TOK",
    "BLOCK_TYPES",
    "Pcfg",
    "sample_grammar",
    "generate_sequence",
    "boundary_next_distribution",
    "block_counts",
    "grammar_posterior",
]

A_TOK, B_TOK, EOS_TOK = 0, 1, 2
VOCAB = 3

# letter pairs of the four block productions, in probability order p_1..p_4
BLOCK_TYPES = ((A_TOK, B_TOK), (B_TOK, A_TOK), (A_TOK, A_TOK), (B_TOK, B_TOK))


@dataclass(frozen=True)
class Pcfg:
    """Block-production probabilities p (4 types) and continuation probabilities q.

    q[0] opens a nested block, q[1] emits eos.  family = "simple" requires
    p[2] = p[3] = 0 exactly.
    """

    p: Distribution
    q: Distribution
    family: str

    def __post_init__(self):
        if len(self.p) != 4 or len(self.q) != 2:
            raise DomainError("p must have 4 entries and q must have 2")
        if self.family not in ("simple", "complex"):
            raise DomainError(f"family must be 'simple' or 'complex', got {self.family!r}")
        if self.family == "simple" and (self.p[2] != 0.0 or self.p[3] != 0.0):
            raise DomainError("simple grammars require p[2] = p[3] = 0 exactly")


def sample_grammar(rng: Rng, family: str) -> Pcfg:
    """complex: p ~ Dir(1,1,1,1); simple: (p1,p2) ~ Dir(1,1) with p3=p4=0; q ~ Dir(1,1)."""
    if family == "complex":
        p = rng.gen.dirichlet(np.ones(4))
    elif family == "simple":
        head = rng.gen.dirichlet(np.ones(2))
        p = np.array([head[0], head[1], 0.0, 0.0])
    else:
        raise DomainError(f"family must be 'simple' or 'complex', got {family!r}")
    q = rng.gen.dirichlet(np.ones(2))
    return Pcfg(Distribution(p / p.sum()), Distribution(q / q.sum()), family)


def _derive(rng: Rng, grammar: Pcfg, depth: int, max_depth: int, out: list) -> None:
    """Leftmost derivation of one start-symbol expansion, appended to ``out``.

    Depth starts at 0 and increments each time the continuation nonterminal
    opens a nested block; at depth >= max_depth the continuation is forced
    to eos, so max_depth = 0 yields exactly two letters plus eos.
    """
    block = BLOCK_TYPES[int(rng.gen.choice(4, p=grammar.p.probs))]
    out.extend(block)
    if depth < max_depth and int(rng.gen.choice(2, p=grammar.q.probs)) == 0:
        _derive(rng, grammar, depth + 1, max_depth, out)
    else:
        out.append(EOS_TOK)


def generate_sequence(rng: Rng, grammar: Pcfg, length: int, max_depth: int) -> TokenSequence:
    """Concatenate fresh derivations until ``length`` tokens, truncating the last one."""
    if length < 3:
        raise DomainError("length must be >= 3 (one full block)")
    if max_depth < 0:
        raise DomainError("max_depth must be >= 0")
    tokens: list = []
    while len(tokens) < length:
        _derive(rng, grammar, 0, max_depth, tokens)
    return TokenSequence(np.array(tokens[:length], dtype=np.int64), VOCAB)


def boundary_next_distribution(grammar: Pcfg, last_letter: int) -> Distribution:
    """Law of the second letter of a depth-0 block given its first letter.

    Returns a Distribution over (a, b).  first = a: P(b) = p1/(p1+p3),
    P(a) = p3/(p1+p3); first = b: P(a) = p2/(p2+p4), P(b) = p4/(p2+p4).
    """
    p = grammar.p
    if last_letter == A_TOK:
        denom = p[0] + p[2]
        if denom == 0.0:
            raise DegenerateSupportError("no block opens with 'a' under this grammar")
        return Distribution(np.array([p[2] / denom, p[0] / denom]))
    if last_letter == B_TOK:
        denom = p[1] + p[3]
        if denom == 0.0:
            raise DegenerateSupportError("no block opens with 'b' under this grammar")
        return Distribution(np.array([p[1] / denom, p[3] / denom]))
    raise DomainError(f"last_letter must be {A_TOK} (a) or {B_TOK} (b), got {last_letter!r}")


def block_counts(seq: TokenSequence) -> np.ndarray:
    """Counts (n1..n4) of the four block types in a depth-0 sequence.

    The sequence must segment cleanly into (letter, letter, eos) blocks;
    anything else raises SequenceParseError.
    """
    toks = seq.tokens
    if toks.size % 3 != 0:
        raise SequenceParseError(f"length {toks.size} is not a whole number of blocks")
    counts = np.zeros(4, dtype=np.int64)
    index = {pair: i for i, pair in enumerate(BLOCK_TYPES)}
    for start in range(0, toks.size, 3):
        first, second, tail = (int(t) for t in toks[start : start + 3])
        if tail != EOS_TOK or (first, second) not in index:
            raise SequenceParseError(f"malformed block at position {start}")
        counts[index[(first, second)]] += 1
    return counts


def _log_marginal_complex(counts: np.ndarray) -> float:
    n = float(counts.sum())
    return float(gammaln(4.0) - gammaln(4.0 + n) + gammaln(1.0 + counts).sum())


def _log_marginal_simple(counts: np.ndarray) -> float:
    if counts[2] + counts[3] > 0:
        return -math.inf
    n = float(counts[0] + counts[1])
    return float(gammaln(2.0) - gammaln(2.0 + n) + gammaln(1.0 + counts[:2]).sum())


def grammar_posterior(seq: TokenSequence, prior: Distribution | None = None) -> PosteriorReport:
    """Family posterior over ("simple", "complex") from depth-0 block counts.

    Each family is scored by the exact flat-Dirichlet multinomial marginal of
    its block-type counts; the simple family has zero likelihood as soon as a
    repeated-letter block occurs.
    """
    if prior is None:
        prior = uniform_distribution(2)
    counts = block_counts(seq)
    logs = np.array([_log_marginal_simple(counts), _log_marginal_complex(counts)])
    return make_posterior_report(("simple", "complex"), logs, prior)
