"""Mixed-dimensionality noiseless linear regression.

Tasks draw their weight vector either on the full d-dimensional space or on
the axis-aligned first-half subspace (zero-padded), labels are exact inner
products, and dimensionality selection compares closed-form Gaussian
evidence terms: in the underdetermined regime the restricted family is
scored as a degenerate density on its column space, carried in log space
with -inf marking off-subspace contexts.  Wishart log-determinant
expectations provide the analytic oracle for the evidence gap's growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEvidenceError, DomainError
from .numerics import (
    Distribution,
    Rng,
    log_det_gram,
    log_sum_exp,
    multivariate_digamma,
    pinv_apply,
)

__all__ = [
    "RegressionTask",
    "RegressionContext",
    "DimPosterior",
    "GapRow",
    "sample_task",
    "generate_context",
    "ls_solution",
    "marginal_log_density",
    "dim_posterior",
    "expected_log_det",
    "log_det_gap_experiment",
    "ON_SUBSPACE_RELATIVE_RESIDUAL",
]

LOG_2PI = math.log(2.0 * math.pi)

# relative projection residual below which y counts as lying in the column
# space of the restricted design (the Dirac constraint realized in floats)
ON_SUBSPACE_RELATIVE_RESIDUAL = 1e-8


@dataclass(frozen=True)
class RegressionTask:
    """Ground-truth regressor; active_dim is either d/2 (tail exactly zero) or d."""

    ambient_dim: int
    active_dim: int
    weights: np.ndarray

    def __post_init__(self):
        d = self.ambient_dim
        if d < 2 or d % 2 != 0:
            raise DomainError("ambient_dim must be an even integer >= 2")
        if self.active_dim not in (d // 2, d):
            raise DomainError("active_dim must be d/2 or d")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (d,):
            raise DomainError(f"weights must have length {d}")
        if self.active_dim == d // 2 and np.any(w[d // 2:] != 0.0):
            raise DomainError("half-dimensional task must have an exactly zero tail")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def category(self) -> str:
        return "simple" if self.active_dim == self.ambient_dim // 2 else "complex"


@dataclass(frozen=True)
class RegressionContext:
    """T noiseless demonstrations (features, labels) plus one query point."""

    features: np.ndarray
    labels: np.ndarray
    query: np.ndarray
    task: RegressionTask | None = None

    def __post_init__(self):
        a = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        q = np.asarray(self.query, dtype=np.float64)
        if a.ndim != 2 or y.ndim != 1 or a.shape[0] != y.size:
            raise DomainError("features must be T x d with matching labels")
        if q.shape != (a.shape[1],):
            raise DomainError("query must be a length-d vector")
        for arr, name in ((a, "features"), (y, "labels"), (q, "query")):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_examples(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class DimPosterior:
    """Evidence and posterior over {d/2, d}, index 0 = d/2, plus the mixture regressor."""

    log_densities: np.ndarray
    posterior: Distribution
    w_bayes: np.ndarray


def sample_task(rng: Rng, d: int, category: str) -> RegressionTask:
    """simple: w = [N(0, I_{d/2}), 0]; complex: w ~ N(0, I_d)."""
    if d < 2 or d % 2 != 0:
        raise DomainError(f"d must be an even integer >= 2, got {d}")
    if category == "simple":
        w = np.zeros(d)
        w[: d // 2] = rng.gen.standard_normal(d // 2)
        return RegressionTask(d, d // 2, w)
    if category == "complex":
        return RegressionTask(d, d, rng.gen.standard_normal(d))
    raise DomainError(f"category must be 'simple' or 'complex', got {category!r}")


def generate_context(rng: Rng, task: RegressionTask, n_examples: int) -> RegressionContext:
    """i.i.d. standard-normal rows and query; labels are exact inner products."""
    if n_examples < 1:
        raise DomainError("need at least one example")
    d = task.ambient_dim
    features = rng.gen.standard_normal((n_examples, d))
    query = rng.gen.standard_normal(d)
    return RegressionContext(features, features @ task.weights, query, task)


def _restricted(ctx: RegressionContext, restrict: str) -> np.ndarray:
    if restrict == "full_d":
        return ctx.features
    if restrict == "half_d":
        return ctx.features[:, : ctx.dim // 2]
    raise DomainError(f"restrict must be 'full_d' or 'half_d', got {restrict!r}")


def ls_solution(ctx: RegressionContext, restrict: str = "full_d") -> np.ndarray:
    """Least-squares / min-norm solution, zero-padded back to length d for half_d."""
    design = _restricted(ctx, restrict)
    solution = pinv_apply(design, ctx.labels)
    if restrict == "half_d":
        solution = np.concatenate([solution, np.zeros(ctx.dim - ctx.dim // 2)])
    return solution


def _log_density(design: np.ndarray, y: np.ndarray) -> float:
    """Log evidence of y = A w, w ~ N(0, I_a), for a T x a design.

    T <= a: nondegenerate Gaussian on R^T,
        -(T/2) ln 2pi - (1/2) ln det(A A^T) - (1/2) ||w_ls||^2.
    T > a: density on the column space when y lies in it, else -inf,
        -(a/2) ln 2pi - (1/2) ln det(A^T A) - (1/2) ||w_ls||^2.
    """
    n, active = design.shape
    w_ls = pinv_apply(design, y)
    quad = float(w_ls @ w_ls)
    if n <= active:
        return -0.5 * n * LOG_2PI - 0.5 * log_det_gram(design, "aat") - 0.5 * quad
    norm_y = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(design @ w_ls - y))
    if norm_y > 0.0 and residual > ON_SUBSPACE_RELATIVE_RESIDUAL * norm_y:
        return -math.inf
    return -0.5 * active * LOG_2PI - 0.5 * log_det_gram(design, "ata") - 0.5 * quad


def marginal_log_density(ctx: RegressionContext, dim: str) -> float:
    """Log evidence of the labels under the half_d or full_d regressor family."""
    return _log_density(_restricted(ctx, dim), ctx.labels)


def _on_subspace(design: np.ndarray, y: np.ndarray) -> bool:
    w_ls = pinv_apply(design, y)
    norm_y = float(np.linalg.norm(y))
    if norm_y == 0.0:
        return True
    return float(np.linalg.norm(design @ w_ls - y)) <= ON_SUBSPACE_RELATIVE_RESIDUAL * norm_y


def dim_posterior(ctx: RegressionContext) -> DimPosterior:
    """Uniform-prior posterior over {d/2, d} and the posterior-weighted regressor.

    For T < d the printed density formulas are normalized directly.  For
    T >= d both families are Dirac-type and direct density comparison breaks
    down; selection is then exact subspace membership (the lower-dimensional
    family wins whenever it contains the labels), reported as a {0,1}
    posterior with the excluded branch at -inf.
    """
    d, n = ctx.dim, ctx.n_examples
    logs = np.array(
        [marginal_log_density(ctx, "half_d"), marginal_log_density(ctx, "full_d")]
    )
    if n >= d:
        if _on_subspace(ctx.features[:, : d // 2], ctx.labels):
            logs[1] = -math.inf
        elif _on_subspace(ctx.features, ctx.labels):
            logs[0] = -math.inf
        else:
            raise DegenerateEvidenceError("labels lie in neither family's column space")
    if np.all(np.isinf(logs)):
        raise DegenerateEvidenceError("both families have zero evidence")
    norm = log_sum_exp(logs)
    posterior = np.exp(logs - norm)
    posterior = Distribution(posterior / posterior.sum())
    w_mix = posterior[0] * ls_solution(ctx, "half_d") + posterior[1] * ls_solution(ctx, "full_d")
    return DimPosterior(logs, posterior, w_mix)


def expected_log_det(kind: str, d: int, n_examples: int) -> float:
    """Analytic Wishart expectation of a Gram log-determinant.

    kind "full_rows": E ln det(A A^T) for T x d standard-normal A (needs T <= d),
        psi_T(d/2) + T ln 2.
    kind "restricted_cols": E ln det(B^T B) for the T x (d/2) left block (needs
        T >= d/2), psi_{d/2}(T/2) + (d/2) ln 2.
    """
    if d < 2 or d % 2 != 0:
        raise DomainError("d must be an even integer >= 2")
    if n_examples < 1:
        raise DomainError("n_examples must be >= 1")
    if kind == "full_rows":
        if n_examples > d:
            raise DomainError("full_rows form needs T <= d for a full-rank Wishart")
        return multivariate_digamma(n_examples, d / 2.0) + n_examples * math.log(2.0)
    if kind == "restricted_cols":
        half = d // 2
        if n_examples < half:
            raise DomainError("restricted_cols form needs T >= d/2 for a full-rank Wishart")
        return multivariate_digamma(half, n_examples / 2.0) + half * math.log(2.0)
    raise DomainError(f"kind must be 'full_rows' or 'restricted_cols', got {kind!r}")


@dataclass(frozen=True)
class GapRow:
    """Sampled and analytic statistics of one log-determinant gap setting."""

    d: int
    n_examples: int
    mean_gap: float
    std_gap: float
    sem_gap: float
    analytic_gap: float
    mean_ratio: float  # mean_gap / (d ln d)


def analytic_log_det_gap(d: int, n_examples: int) -> float:
    """E ln det(A A^T) - E ln det(B^T B) for the T x d design and its left half."""
    return expected_log_det("full_rows", d, n_examples) - expected_log_det(
        "restricted_cols", d, n_examples
    )


def log_det_gap_experiment(rng: Rng, d_list, c: float, trials: int) -> list:
    """Sample the evidence-gap log determinant Delta_d at T = round(c d).

    Every d in d_list must satisfy d/2 < round(c d) < d; trials must be
    positive.  Returns one GapRow per d with sampled mean/std/sem, the
    analytic digamma-based expectation, and mean_gap / (d ln d).
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 0.5 < c < 1.0:
        raise DomainError("c must lie in (1/2, 1)")
    rows = []
    for k, d in enumerate(d_list):
        n = int(round(c * d))
        if not d // 2 < n < d:
            raise DomainError(f"d={d}: T=round(c*d)={n} violates d/2 < T < d")
        sub = rng.substream(k)
        gaps = np.empty(trials)
        for t in range(trials):
            a = sub.gen.standard_normal((n, d))
            gaps[t] = log_det_gram(a, "aat") - log_det_gram(a[:, : d // 2], "ata")
        mean = float(gaps.mean())
        std = float(gaps.std(ddof=1)) if trials > 1 else 0.0
        rows.append(
            GapRow(
                d=int(d),
                n_examples=n,
                mean_gap=mean,
                std_gap=std,
                sem_gap=std / math.sqrt(trials),
                analytic_gap=analytic_log_det_gap(int(d), n),
                mean_ratio=mean / (d * math.log(d)),
            )
        )
    return rows
