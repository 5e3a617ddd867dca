"""Boolean-function prompts and the exact hypothesis-selection oracle.

Two nested rule families over x in {0,1}^d: d copy-bit rules y = x[i] and
C(d,3) majority-of-three rules.  Prompts are labelled examples that either
agree with both the first-bit copy rule and a sampled majority triple
(ambiguous) or only with the triple (complex), plus a query on which the
two rules disagree.  The oracle puts half its prior mass on each family,
uniform within, zeroes out falsified rules, and votes with the remaining
mass; the family split makes each surviving copy-bit rule carry more mass
than each surviving triple, which is the whole Occam effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DomainError, InconsistentContextError, InfeasibleSamplingError
from .numerics import Distribution, Rng

__all__ = [
    "BooleanPrompt",
    "HypothesisPosterior",
    "majority",
    "gen_prompt",
    "hypothesis_posterior",
    "bayes_label",
    "REJECTION_BUDGET",
]

REJECTION_BUDGET = 100_000


def majority(x: np.ndarray, triple) -> int:
    """1 when at least two of the three indexed bits are set."""
    i, j, k = triple
    return int(int(x[i]) + int(x[j]) + int(x[k]) >= 2)


@dataclass(frozen=True)
class BooleanPrompt:
    """Labelled examples plus an unambiguous query for one sampled triple."""

    dim: int
    triple: tuple
    examples: tuple  # of (bits ndarray, label int)
    query: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in ("ambiguous", "complex"):
            raise DomainError(f"mode must be 'ambiguous' or 'complex', got {self.mode!r}")
        if len(set(self.triple)) != 3 or any(not 0 <= i < self.dim for i in self.triple):
            raise DomainError("triple must be 3 distinct indices in [0, dim)")

    @property
    def simple_label(self) -> int:
        return int(self.query[0])

    @property
    def complex_label(self) -> int:
        return majority(self.query, self.triple)


@dataclass(frozen=True)
class HypothesisPosterior:
    """Posterior mass per copy-bit rule and per triple, plus the family split."""

    simple_mass: np.ndarray  # length d, entry i = mass of rule y = x[i]
    complex_mass: dict  # triple -> mass, over surviving triples only
    family_posterior: Distribution  # over (simple, complex)
    dim: int


def _sample_bits(rng: Rng, d: int) -> np.ndarray:
    return rng.gen.integers(0, 2, size=d).astype(np.int64)


def _rejection_sample(rng: Rng, d: int, accept, what: str) -> np.ndarray:
    for _ in range(REJECTION_BUDGET):
        x = _sample_bits(rng, d)
        if accept(x):
            return x
    raise InfeasibleSamplingError(f"could not sample {what} in {REJECTION_BUDGET} attempts")


def gen_prompt(
    rng: Rng,
    d: int,
    n_examples: int,
    mode: str,
    allow_index0_in_triple: bool = True,
) -> BooleanPrompt:
    """Sample a prompt of the requested mode.

    ambiguous: every example satisfies x[0] = Maj(x[triple]) with that common
    label; complex: every example has label Maj(x[triple]) != x[0].  The query
    always has x[0] != Maj(x[triple]).  Triples are uniform over distinct
    index triples, including index 0 unless allow_index0_in_triple is False.
    """
    if d < 5:
        raise DomainError("d must be >= 5")
    if n_examples < 1:
        raise DomainError("n_examples must be >= 1")
    if mode not in ("ambiguous", "complex"):
        raise DomainError(f"mode must be 'ambiguous' or 'complex', got {mode!r}")
    pool = np.arange(d) if allow_index0_in_triple else np.arange(1, d)
    triple = tuple(sorted(int(i) for i in rng.gen.choice(pool, size=3, replace=False)))

    if mode == "ambiguous":
        keep = lambda x: int(x[0]) == majority(x, triple)
    else:
        keep = lambda x: int(x[0]) != majority(x, triple)
    examples = []
    for _ in range(n_examples):
        x = _rejection_sample(rng, d, keep, f"{mode} example")
        examples.append((x, majority(x, triple)))
    query = _rejection_sample(
        rng, d, lambda x: int(x[0]) != majority(x, triple), "unambiguous query"
    )
    return BooleanPrompt(d, triple, tuple(examples), query, mode)


def hypothesis_posterior(examples, d: int) -> HypothesisPosterior:
    """Exact posterior over all d + C(d,3) deterministic rules.

    Prior: 1/2 split between families, uniform inside each (1/(2d) per
    copy-bit rule, 1/(2 C(d,3)) per triple).  A rule keeps its mass iff it
    reproduces every label; the survivors are renormalized.
    """
    if d < 3:
        raise DomainError("d must be >= 3")
    triples = list(combinations(range(d), 3))
    simple = np.full(d, 0.5 / d)
    for x, y in examples:
        simple[np.asarray(x)[:d] != int(y)] = 0.0
    complex_prior = 0.5 / len(triples)
    complex_mass = {}
    for triple in triples:
        if all(majority(x, triple) == int(y) for x, y in examples):
            complex_mass[triple] = complex_prior
    total = float(simple.sum()) + complex_prior * len(complex_mass)
    if total == 0.0:
        raise InconsistentContextError("no rule in either family explains the examples")
    simple /= total
    complex_mass = {t: m / total for t, m in complex_mass.items()}
    family = np.array([float(simple.sum()), float(sum(complex_mass.values()))])
    return HypothesisPosterior(simple, complex_mass, Distribution(family / family.sum()), d)


def bayes_label(posterior: HypothesisPosterior, query: np.ndarray):
    """Posterior-weighted vote of all surviving rules at the query point.

    Returns (label, margin) where margin = |mass voting 1 - mass voting 0|.
    Ties below 1e-12 are broken toward the simple family's own majority vote.
    """
    query = np.asarray(query)
    vote_one = float(np.sum(posterior.simple_mass * (query[: posterior.dim] == 1)))
    vote_one += sum(m for t, m in posterior.complex_mass.items() if majority(query, t) == 1)
    margin = abs(2.0 * vote_one - 1.0)
    if margin >= 1e-12:
        return int(vote_one > 0.5), margin
    simple_one = float(np.sum(posterior.simple_mass * (query[: posterior.dim] == 1)))
    simple_total = float(posterior.simple_mass.sum())
    return int(simple_one > simple_total / 2.0), margin
