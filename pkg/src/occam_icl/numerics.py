"""Deterministic numerical substrate shared by every task family.

Seeded counter-based random streams, log-gamma-family special functions,
minimum-norm least squares, Gram-matrix log-determinants, and categorical
distribution utilities.  All likelihood arithmetic elsewhere in the library
is carried in log space and normalized through :func:`log_sum_exp`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DegenerateEvidenceError, DomainError, SingularMatrixError

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15  # odd constant for substream key mixing


@dataclass
class Rng:
    """Counter-based random stream keyed by ``(seed, stream)``.

    Equal keys replay the identical draw sequence across runs and platforms;
    distinct ``stream`` values under one seed give statistically independent
    streams with no shared state, so per-trial streams are reproducible no
    matter how trials are scheduled.
    """

    seed: int
    stream: int = 0
    gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        key = np.array([self.seed & _MASK64, self.stream & _MASK64], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "Rng":
        """Derive child stream ``index``; children of distinct parents never collide."""
        if index < 0:
            raise DomainError("substream index must be non-negative")
        child = ((self.stream * _GOLDEN64) + index + 1) & _MASK64
        return Rng(self.seed, child)


@dataclass(frozen=True)
class Distribution:
    """Probability vector over a finite support (entries >= 0, sum 1 within 1e-12)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("probability vector must be 1-D and non-empty")
        if not np.isfinite(p).all() or np.any(p < 0.0):
            raise DomainError("probabilities must be finite and non-negative")
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {float(p.sum())!r}, not 1")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return int(self.probs.size)

    def __getitem__(self, i) -> float:
        return float(self.probs[i])


def normalized(weights) -> Distribution:
    """Scale a non-negative weight vector into a Distribution."""
    w = np.asarray(weights, dtype=np.float64)
    total = float(w.sum())
    if not total > 0.0 or not np.isfinite(total):
        raise DomainError("weights must have a positive finite sum")
    return Distribution(w / total)


def uniform_distribution(n: int) -> Distribution:
    return Distribution(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class PosteriorReport:
    """Per-hypothesis log marginal likelihoods with the induced posterior.

    ``posterior`` is proportional to ``exp(log_marginals) * prior.probs``,
    normalized in log space.
    """

    hypotheses: tuple
    log_marginals: np.ndarray
    posterior: Distribution
    prior: Distribution

    def map_hypothesis(self):
        """Hypothesis label with the largest posterior mass."""
        return self.hypotheses[int(np.argmax(self.posterior.probs))]


def make_posterior_report(hypotheses, log_marginals, prior: Distribution) -> PosteriorReport:
    """Normalize log marginals against a prior into a PosteriorReport."""
    logs = np.asarray(log_marginals, dtype=np.float64)
    if len(hypotheses) != logs.size or len(prior) != logs.size:
        raise DomainError("hypotheses, log marginals and prior must have equal length")
    with np.errstate(divide="ignore"):
        weighted = logs + np.log(prior.probs)
    norm = log_sum_exp(weighted)
    if norm == -math.inf:
        raise DegenerateEvidenceError("all hypotheses have zero posterior mass")
    post = np.exp(weighted - norm)
    return PosteriorReport(tuple(hypotheses), logs, Distribution(post / post.sum()), prior)


# -- special functions ---------------------------------------------------


def _check_positive(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} must be a positive finite real, got {x!r}")
    return x


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    return float(special.gammaln(_check_positive(x, "x")))


def digamma(x: float) -> float:
    """psi(x) for x > 0."""
    return float(special.digamma(_check_positive(x, "x")))


def trigamma(x: float) -> float:
    """psi_1(x) for x > 0."""
    return float(special.polygamma(1, _check_positive(x, "x")))


def multivariate_digamma(p: int, a: float) -> float:
    """sum_{i=1..p} psi(a + (1-i)/2), defined for a > (p-1)/2."""
    if p < 1:
        raise DomainError(f"dimension p must be >= 1, got {p}")
    a = float(a)
    if not math.isfinite(a) or not a > (p - 1) / 2.0:
        raise DomainError(f"require a > (p-1)/2 = {(p - 1) / 2}, got {a!r}")
    i = np.arange(1, p + 1, dtype=np.float64)
    return float(special.digamma(a + (1.0 - i) / 2.0).sum())


# -- sampling ------------------------------------------------------------


def sample_dirichlet(rng: Rng, alpha) -> Distribution:
    """One draw from Dirichlet(alpha); marginal means are alpha_i / sum(alpha)."""
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise DomainError("alpha must be a non-empty 1-D vector")
    if not np.isfinite(a).all() or np.any(a <= 0.0):
        raise DomainError("alpha entries must be positive finite reals")
    draw = rng.gen.dirichlet(a)
    return Distribution(draw / draw.sum())


# -- dense linear algebra ------------------------------------------------

SVD_RELATIVE_CUTOFF = 1e-10  # singular values below cutoff*(largest) count as zero
GRAM_PIVOT_RELATIVE_CUTOFF = 1e-12


def pinv_apply(a: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pseudoinverse solve ``pinv(A) @ y``; min-norm interpolator when underdetermined."""
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if a.ndim != 2 or y.ndim != 1 or a.shape[0] != y.size:
        raise DomainError(f"shape mismatch: A is {a.shape}, y has length {y.size}")
    solution, _, _, _ = np.linalg.lstsq(a, y, rcond=SVD_RELATIVE_CUTOFF)
    return solution


def log_det_gram(a: np.ndarray, mode: str) -> float:
    """ln det of A@A.T (mode "aat") or A.T@A (mode "ata") via Cholesky.

    Raises SingularMatrixError when a pivot falls below
    ``GRAM_PIVOT_RELATIVE_CUTOFF * trace``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DomainError("A must be a matrix")
    if mode == "aat":
        gram = a @ a.T
    elif mode == "ata":
        gram = a.T @ a
    else:
        raise DomainError(f"mode must be 'aat' or 'ata', got {mode!r}")
    gram = (gram + gram.T) / 2.0
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Gram matrix is not positive definite: {exc}") from exc
    pivots = np.diag(chol) ** 2
    if np.any(pivots < GRAM_PIVOT_RELATIVE_CUTOFF * float(np.trace(gram))):
        raise SingularMatrixError("Gram matrix pivot below rank tolerance")
    return float(2.0 * np.log(np.diag(chol)).sum())


# -- categorical utilities -----------------------------------------------


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """KL(p || q) in nats; returns math.inf when q lacks mass somewhere p has it."""
    if len(p) != len(q):
        raise DomainError(f"support mismatch: {len(p)} vs {len(q)}")
    pp, qq = p.probs, q.probs
    support = pp > 0.0
    if np.any(qq[support] == 0.0):
        return math.inf
    val = float(np.sum(pp[support] * (np.log(pp[support]) - np.log(qq[support]))))
    return val if val > 0.0 else 0.0


def log_sum_exp(xs) -> float:
    """Overflow-safe ln(sum(exp(xs))) for a non-empty vector."""
    x = np.asarray(xs, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("log_sum_exp requires a non-empty vector")
    m = float(np.max(x))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(x - m))))
