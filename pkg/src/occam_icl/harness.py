"""Experiment orchestration: preset configs, seeded sweeps, report emission.

Every experiment resolves a config (preset defaults, overridden by a config
file, overridden by CLI flags), runs seeded trials on disjoint counter-based
substreams so results are independent of scheduling, and writes one
``report.json`` plus plot-ready CSV tables.  Re-running with the same config
and seed reproduces the per-trial CSV bytes exactly.

Preset defaults follow the reference evaluation settings: vocabulary 3 with
context length 300 for orders {1,3} (200 for {1,2}), regression at d in
{10, 20}, and 100 bootstrap resamples for confidence intervals.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import attention, boolfun, llm_probe, markov, pcfg, regression
from .errors import ConfigError, UnseenContextError
from .numerics import Rng, kl_divergence

__all__ = [
    "ExperimentConfig",
    "Report",
    "EXPERIMENT_NAMES",
    "preset_params",
    "run",
    "run_trials",
    "emit_csv",
    "emit_json",
    "load_report",
]


@dataclass
class ExperimentConfig:
    """One experiment run: name, seed, trial count, experiment-specific params."""

    experiment: str
    seed: int = 0
    trials: int | None = None
    params: dict = field(default_factory=dict)

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - {"experiment", "seed", "trials", "params"}
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        if "experiment" not in doc:
            raise ConfigError("config field 'experiment' is required")
        return ExperimentConfig(
            experiment=doc["experiment"],
            seed=int(doc.get("seed", 0)),
            trials=None if doc.get("trials") is None else int(doc["trials"]),
            params=dict(doc.get("params", {})),
        )


@dataclass
class Report:
    """Config echo, per-trial records, derived tables, aggregates, timing."""

    config: dict
    records: list
    tables: dict
    aggregates: dict
    wall_clock_s: float
    version: str


def _round12(value):
    """Round floats to 12 significant digits, recursively, for stable serialization."""
    if isinstance(value, bool):
        return value
    if isinstance(value, (np.floating, float)):
        return float(f"{float(value):.12g}")
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, dict):
        return {k: _round12(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round12(v) for v in value]
    return value


def run_trials(n_trials: int, fn, base: Rng, parallel: int = 0) -> list:
    """Run fn(trial_index, rng) on per-trial substreams; order-independent results."""
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(fn, t, base.substream(t)) for t in range(n_trials)]
            records = [f.result() for f in futures]
    else:
        records = [fn(t, base.substream(t)) for t in range(n_trials)]
    return sorted(records, key=lambda r: r["trial"])


# -- experiment runners ----------------------------------------------------
#
# Each runner takes (params, trials, base_rng) and returns
# (records, tables, aggregates).  Records are flat dicts with a "trial" key.


def _resolve_markov_length(params) -> int:
    if params["length"] is not None:
        return int(params["length"])
    return 200 if list(params["orders"]) == [1, 2] else 300


def _markov_trial_record(t, rng, true_order, orders, vocab, alpha, length, min_visits):
    chain = markov.sample_chain(rng, true_order, vocab, alpha)
    seq = markov.generate_sequence(rng, chain, length)
    rec = {"trial": t, "true_order": true_order, "length": length}
    for method in ("exact", "bic"):
        report = markov.order_posterior(seq, orders, method=method)
        idx = report.hypotheses.index(true_order)
        rec[f"posterior_true_{method}"] = report.posterior[idx]
        rec[f"map_{method}"] = int(report.map_hypothesis())
    rec["map_agree"] = int(rec["map_exact"] == rec["map_bic"])
    predictor = markov.bayes_predict(seq, orders, method="exact")
    visits = 0
    try:
        raw = markov.predict_ngram(seq, true_order, "raw")
        context = tuple(int(x) for x in seq.tokens[length - true_order:])
        visits = int(markov.ngram_counts(seq, true_order).row(context).sum())
        rec["kl_raw_vs_bayes"] = (
            kl_divergence(raw, predictor) if visits >= min_visits else math.nan
        )
    except UnseenContextError:
        rec["kl_raw_vs_bayes"] = math.nan
    smoothed = markov.predict_ngram(seq, true_order, "add_one")
    rec["kl_smoothed_vs_bayes"] = kl_divergence(smoothed, predictor)
    rec["context_visits"] = visits
    return rec


def _run_markov_posterior(params, trials, base):
    vocab, alpha = int(params["vocab"]), float(params["alpha"])
    orders = [int(s) for s in params["orders"]]
    true_orders = [int(s) for s in (params["true_orders"] or orders)]
    length = _resolve_markov_length(params)
    min_visits = int(params["kl_min_visits"])
    records, sweep = [], []
    for oi, true_order in enumerate(true_orders):
        sub = base.substream(oi)
        recs = run_trials(
            trials,
            lambda t, rng: _markov_trial_record(
                t, rng, true_order, orders, vocab, alpha, length, min_visits
            ),
            sub,
        )
        records.extend(recs)
        confident = np.array([r["posterior_true_exact"] > 0.95 for r in recs])
        kls = np.array([r["kl_raw_vs_bayes"] for r in recs])
        sweep.append(
            {
                "true_order": true_order,
                "frac_confident_exact": float(confident.mean()),
                "mean_posterior_true_exact": float(
                    np.mean([r["posterior_true_exact"] for r in recs])
                ),
                "map_agreement_rate": float(np.mean([r["map_agree"] for r in recs])),
                "mean_kl_raw_vs_bayes": float(np.nanmean(kls)) if np.any(~np.isnan(kls)) else math.nan,
                "mean_kl_smoothed_vs_bayes": float(
                    np.mean([r["kl_smoothed_vs_bayes"] for r in recs])
                ),
            }
        )
    aggregates = {"per_true_order": sweep}
    return records, {"summary": sweep}, aggregates


def _run_markov_ctx_sweep(params, trials, base):
    vocab, alpha = int(params["vocab"]), float(params["alpha"])
    orders = [int(s) for s in params["orders"]]
    true_orders = [int(s) for s in (params["true_orders"] or orders)]
    lengths = sorted(int(x) for x in params["lengths"])
    min_visits = int(params["kl_min_visits"])
    max_len = lengths[-1]
    records = []
    for oi, true_order in enumerate(true_orders):
        sub = base.substream(oi)

        def one_trial(t, rng, true_order=true_order):
            chain = markov.sample_chain(rng, true_order, vocab, alpha)
            seq = markov.generate_sequence(rng, chain, max_len)
            out = {"trial": t, "true_order": true_order}
            for length in lengths:
                prefix = markov.TokenSequence(seq.tokens[:length], vocab)
                report = markov.order_posterior(prefix, orders, method=params["method"])
                idx = report.hypotheses.index(true_order)
                out[f"posterior_true_T{length}"] = report.posterior[idx]
                predictor = markov.bayes_predict(prefix, orders, method=params["method"])
                try:
                    raw = markov.predict_ngram(prefix, true_order, "raw")
                    context = tuple(int(x) for x in prefix.tokens[length - true_order:])
                    visits = int(markov.ngram_counts(prefix, true_order).row(context).sum())
                    out[f"kl_raw_T{length}"] = (
                        kl_divergence(raw, predictor) if visits >= min_visits else math.nan
                    )
                except UnseenContextError:
                    out[f"kl_raw_T{length}"] = math.nan
                out[f"kl_smoothed_T{length}"] = kl_divergence(
                    markov.predict_ngram(prefix, true_order, "add_one"), predictor
                )
            return out

        records.extend(run_trials(trials, one_trial, sub))
    sweep = []
    for true_order in true_orders:
        recs = [r for r in records if r["true_order"] == true_order]
        for length in lengths:
            post = np.array([r[f"posterior_true_T{length}"] for r in recs])
            kl_raw = np.array([r[f"kl_raw_T{length}"] for r in recs])
            sweep.append(
                {
                    "true_order": true_order,
                    "length": length,
                    "mean_posterior_true": float(post.mean()),
                    "frac_confident": float((post > 0.95).mean()),
                    "mean_kl_raw_vs_bayes": float(np.nanmean(kl_raw))
                    if np.any(~np.isnan(kl_raw))
                    else math.nan,
                    "mean_kl_smoothed_vs_bayes": float(
                        np.mean([r[f"kl_smoothed_T{length}"] for r in recs])
                    ),
                    "n_valid_kl": int(np.sum(~np.isnan(kl_raw))),
                }
            )
    return records, {"sweep": sweep}, {"sweep": sweep}


def _regression_trial_record(t, rng, d, n_examples, category):
    task = regression.sample_task(rng, d, category)
    ctx = regression.generate_context(rng, task, n_examples)
    post = regression.dim_posterior(ctx)
    w_half = regression.ls_solution(ctx, "half_d")
    w_full = regression.ls_solution(ctx, "full_d")
    norm_half = float(np.linalg.norm(w_half))
    rel_to_half = (
        float(np.linalg.norm(post.w_bayes - w_half)) / norm_half if norm_half > 0 else math.nan
    )
    true_norm = float(np.linalg.norm(task.weights))
    return {
        "trial": t,
        "category": category,
        "posterior_half": post.posterior[0],
        "posterior_full": post.posterior[1],
        "log_density_half": float(post.log_densities[0]),
        "log_density_full": float(post.log_densities[1]),
        "rel_dist_bayes_to_half_ls": rel_to_half,
        "rel_dist_bayes_to_true": float(np.linalg.norm(post.w_bayes - task.weights)) / true_norm
        if true_norm > 0
        else math.nan,
        "norm_half_ls": norm_half,
        "norm_full_ls": float(np.linalg.norm(w_full)),
    }


def _run_regression_posterior(params, trials, base):
    d, n_examples = int(params["d"]), int(params["n_examples"])
    categories = list(params["categories"])
    records, summary = [], []
    for ci, category in enumerate(categories):
        recs = run_trials(
            trials,
            lambda t, rng: _regression_trial_record(t, rng, d, n_examples, category),
            base.substream(ci),
        )
        records.extend(recs)
        post_half = np.array([r["posterior_half"] for r in recs])
        rel = np.array([r["rel_dist_bayes_to_half_ls"] for r in recs])
        summary.append(
            {
                "category": category,
                "mean_posterior_half": float(post_half.mean()),
                "frac_half_above_0.99": float((post_half > 0.99).mean()),
                "frac_full_exactly_1": float((post_half == 0.0).mean()),
                "frac_bayes_near_half_ls": float((rel < 0.01).mean()),
            }
        )
    return records, {"summary": summary}, {"per_category": summary}


def _run_regression_ctx_sweep(params, trials, base):
    d = int(params["d"])
    lengths = sorted(int(x) for x in params["lengths"])
    categories = list(params["categories"])
    records = []
    for ci, category in enumerate(categories):
        for li, n_examples in enumerate(lengths):
            recs = run_trials(
                trials,
                lambda t, rng: {
                    **_regression_trial_record(t, rng, d, n_examples, category),
                    "n_examples": n_examples,
                },
                base.substream(ci * 1000 + li),
            )
            records.extend(recs)
    sweep = []
    for category in categories:
        for n_examples in lengths:
            recs = [
                r
                for r in records
                if r["category"] == category and r["n_examples"] == n_examples
            ]
            sweep.append(
                {
                    "category": category,
                    "n_examples": n_examples,
                    "mean_posterior_half": float(np.mean([r["posterior_half"] for r in recs])),
                    "mean_rel_dist_bayes_to_true": float(
                        np.mean([r["rel_dist_bayes_to_true"] for r in recs])
                    ),
                }
            )
    return records, {"sweep": sweep}, {"sweep": sweep}


def _run_wishart_gap(params, trials, base):
    pairs = [tuple(int(v) for v in pair) for pair in params["pairs"]]
    samples = int(params["samples"])
    records, identities = [], []
    for pi, (d, n) in enumerate(pairs):
        sub = base.substream(pi)
        full = np.empty(samples)
        restricted = np.empty(samples)
        for t in range(samples):
            rng = sub.substream(t)
            a = rng.gen.standard_normal((n, d))
            full[t] = np.linalg.slogdet(a @ a.T)[1]
            restricted[t] = np.linalg.slogdet(a[:, : d // 2].T @ a[:, : d // 2])[1]
            records.append(
                {
                    "trial": pi * samples + t,
                    "d": d,
                    "n_examples": n,
                    "logdet_full_rows": float(full[t]),
                    "logdet_restricted_cols": float(restricted[t]),
                }
            )
        for kind, values in (("full_rows", full), ("restricted_cols", restricted)):
            analytic = regression.expected_log_det(kind, d, n)
            sem = float(values.std(ddof=1)) / math.sqrt(samples)
            identities.append(
                {
                    "d": d,
                    "n_examples": n,
                    "kind": kind,
                    "mc_mean": float(values.mean()),
                    "analytic": analytic,
                    "sem": sem,
                    "abs_z": abs(float(values.mean()) - analytic) / sem,
                }
            )
    gap_rows = regression.log_det_gap_experiment(
        base.substream(10_000),
        [int(x) for x in params["d_list"]],
        float(params["c"]),
        trials,
    )
    gap_table = [
        {
            "d": row.d,
            "n_examples": row.n_examples,
            "mean_gap": row.mean_gap,
            "std_gap": row.std_gap,
            "sem_gap": row.sem_gap,
            "analytic_gap": row.analytic_gap,
            "mean_ratio": row.mean_ratio,
            "analytic_ratio": row.analytic_gap / (row.d * math.log(row.d)),
        }
        for row in gap_rows
    ]
    aggregates = {"identities": identities, "gap": gap_table}
    return records, {"identities": identities, "gap": gap_table}, aggregates


def _run_pcfg(params, trials, base):
    length = int(params["length"])
    if length % 3 != 0:
        raise ConfigError("params.length must be a multiple of 3 for depth-0 blocks")
    families = list(params["families"])
    records, summary = [], []
    for fi, family in enumerate(families):

        def one_trial(t, rng, family=family):
            grammar = pcfg.sample_grammar(rng, family)
            seq = pcfg.generate_sequence(rng, grammar, length, max_depth=0)
            counts = pcfg.block_counts(seq)
            report = pcfg.grammar_posterior(seq)
            return {
                "trial": t,
                "family": family,
                "posterior_simple": report.posterior[0],
                "posterior_complex": report.posterior[1],
                "map_family": report.map_hypothesis(),
                "n_ab": int(counts[0]),
                "n_ba": int(counts[1]),
                "n_aa": int(counts[2]),
                "n_bb": int(counts[3]),
            }

        recs = run_trials(trials, one_trial, base.substream(fi))
        records.extend(recs)
        summary.append(
            {
                "family": family,
                "map_accuracy": float(np.mean([r["map_family"] == family for r in recs])),
                "mean_posterior_true": float(
                    np.mean(
                        [r["posterior_simple" if family == "simple" else "posterior_complex"] for r in recs]
                    )
                ),
            }
        )

    # Monte Carlo consistency of the boundary next-letter law on one complex grammar.
    rng = base.substream(999)
    grammar = pcfg.sample_grammar(rng, "complex")
    blocks = int(params["boundary_blocks"])
    seq = pcfg.generate_sequence(rng, grammar, 3 * blocks, max_depth=0)
    toks = seq.tokens.reshape(blocks, 3)
    boundary = []
    for opener in (pcfg.A_TOK, pcfg.B_TOK):
        opened = toks[toks[:, 0] == opener]
        analytic = pcfg.boundary_next_distribution(grammar, opener)
        freq_a = float(np.mean(opened[:, 1] == pcfg.A_TOK)) if opened.size else math.nan
        boundary.append(
            {
                "opener": "a" if opener == pcfg.A_TOK else "b",
                "n_blocks": int(opened.shape[0]),
                "mc_p_a": freq_a,
                "analytic_p_a": analytic[0],
                "abs_error": abs(freq_a - analytic[0]),
            }
        )
    aggregates = {"per_family": summary, "boundary": boundary}
    return records, {"summary": summary, "boundary": boundary}, aggregates


def _run_attention_verify(params, trials, base):
    vocab, length, c = int(params["vocab"]), int(params["length"]), float(params["c"])

    def one_trial(t, rng):
        report = attention.verify_construction(rng, vocab, length, c)
        return {
            "trial": t,
            "max_abs_error": report.max_abs_error,
            "n_excluded_rows": len(report.excluded_rows),
        }

    records = run_trials(trials, one_trial, base)
    errors = np.array([r["max_abs_error"] for r in records])
    aggregates = {
        "max_error": float(np.nanmax(errors)),
        "mean_error": float(np.nanmean(errors)),
        "vocab": vocab,
        "length": length,
        "c": c,
    }
    return records, {}, aggregates


def _run_boolean_oracle(params, trials, base):
    d = int(params["d"])
    n_list = [int(n) for n in params["n_list"]]
    modes = list(params["modes"])
    allow0 = bool(params["allow_index0_in_triple"])
    records, sweep = [], []
    for mi, mode in enumerate(modes):
        for ni, n_examples in enumerate(n_list):

            def one_trial(t, rng, mode=mode, n_examples=n_examples):
                prompt = boolfun.gen_prompt(rng, d, n_examples, mode, allow0)
                posterior = boolfun.hypothesis_posterior(prompt.examples, d)
                label, margin = boolfun.bayes_label(posterior, prompt.query)
                return {
                    "trial": t,
                    "mode": mode,
                    "n_examples": n_examples,
                    "label": label,
                    "margin": margin,
                    "agree_simple": int(label == prompt.simple_label),
                    "agree_complex": int(label == prompt.complex_label),
                    "family_posterior_simple": posterior.family_posterior[0],
                }

            recs = run_trials(trials, one_trial, base.substream(mi * 1000 + ni))
            records.extend(recs)
            sweep.append(
                {
                    "mode": mode,
                    "n_examples": n_examples,
                    "agree_simple_rate": float(np.mean([r["agree_simple"] for r in recs])),
                    "agree_complex_rate": float(np.mean([r["agree_complex"] for r in recs])),
                    "mean_family_posterior_simple": float(
                        np.mean([r["family_posterior_simple"] for r in recs])
                    ),
                }
            )
    return records, {"sweep": sweep}, {"sweep": sweep}


def _run_llm_probe(params, trials, base):
    if not params["endpoint_url"]:
        raise ConfigError("params.endpoint_url is required for the llm-probe experiment")
    cfg = llm_probe.ProbeConfig(
        endpoint_url=str(params["endpoint_url"]),
        model_name=str(params["model_name"]),
        timeout=float(params["timeout"]),
        max_retries=int(params["max_retries"]),
        temperature=float(params["temperature"]),
    )
    template = params["template"] or llm_probe.DEFAULT_TEMPLATE
    prompts, meta = [], []
    cell = 0
    for d in [int(x) for x in params["d_list"]]:
        for mode in list(params["modes"]):
            for n_examples in [int(n) for n in params["n_list"]]:
                sub = base.substream(cell)
                cell += 1
                for t in range(trials):
                    prompts.append(
                        boolfun.gen_prompt(sub.substream(t), d, n_examples, mode)
                    )
                    meta.append({"d": d, "mode": mode, "n_examples": n_examples})
    results = llm_probe.run_probe(
        cfg, prompts, template, max_in_flight=int(params["max_in_flight"])
    )
    records = [
        {
            "trial": r.prompt_id,
            **meta[r.prompt_id],
            "parsed_label": -1 if r.parsed_label is None else r.parsed_label,
            "agree_simple": -1 if r.agree_simple is None else int(r.agree_simple),
            "agree_complex": -1 if r.agree_complex is None else int(r.agree_complex),
            "retries_used": r.retries_used,
        }
        for r in results
    ]
    scores = llm_probe.score_run(prompts, results, rng=base.substream(10_000))
    return records, {"scores": scores}, {"scores": scores}


# -- registry ---------------------------------------------------------------


@dataclass(frozen=True)
class _Preset:
    runner: object
    trials: int
    params: dict


_PRESETS = {
    "markov-posterior": _Preset(
        _run_markov_posterior,
        trials=200,
        params={
            "vocab": 3,
            "orders": [1, 3],
            "true_orders": None,  # defaults to orders
            "length": None,  # 300 for orders {1,3}, 200 for {1,2}
            "alpha": 1.0,
            "kl_min_visits": 20,
        },
    ),
    "markov-ctx-sweep": _Preset(
        _run_markov_ctx_sweep,
        trials=100,
        params={
            "vocab": 3,
            "orders": [1, 3],
            "true_orders": None,
            "lengths": [50, 100, 200, 400, 800],
            "method": "exact",
            "alpha": 1.0,
            "kl_min_visits": 20,
        },
    ),
    "regression-posterior": _Preset(
        _run_regression_posterior,
        trials=500,
        params={"d": 20, "n_examples": 15, "categories": ["simple", "complex"]},
    ),
    "regression-ctx-sweep": _Preset(
        _run_regression_ctx_sweep,
        trials=200,
        params={"d": 20, "lengths": [5, 10, 15, 19, 25, 39], "categories": ["simple", "complex"]},
    ),
    "wishart-gap": _Preset(
        _run_wishart_gap,
        trials=200,  # gap-sweep trials; identity checks use params.samples
        params={
            "pairs": [[10, 8], [20, 15], [40, 30]],
            "samples": 2000,
            "d_list": [16, 32, 64, 128],
            "c": 0.75,
        },
    ),
    "pcfg": _Preset(
        _run_pcfg,
        trials=200,
        params={"length": 300, "families": ["simple", "complex"], "boundary_blocks": 100_000},
    ),
    "attention-verify": _Preset(
        _run_attention_verify,
        trials=50,
        params={"vocab": 3, "length": 200, "c": 40.0},
    ),
    "boolean-oracle": _Preset(
        _run_boolean_oracle,
        trials=50,
        params={
            "d": 5,
            "n_list": [2, 4, 6, 8, 10],
            "modes": ["ambiguous", "complex"],
            "allow_index0_in_triple": True,
        },
    ),
    "llm-probe": _Preset(
        _run_llm_probe,
        trials=50,
        params={
            "endpoint_url": "",
            "model_name": "",
            "d_list": [5, 6, 7],
            "n_list": [2, 4, 6, 8, 10],
            "modes": ["ambiguous", "complex"],
            "temperature": 0.0,
            "timeout": 30.0,
            "max_retries": 3,
            "max_in_flight": 4,
            "template": None,
        },
    ),
}

EXPERIMENT_NAMES = tuple(sorted(_PRESETS))


def preset_params(experiment: str) -> dict:
    if experiment not in _PRESETS:
        raise ConfigError(f"unknown experiment {experiment!r}; known: {EXPERIMENT_NAMES}")
    preset = _PRESETS[experiment]
    return {"trials": preset.trials, **{k: v for k, v in preset.params.items()}}


def _resolve(config: ExperimentConfig):
    if config.experiment not in _PRESETS:
        raise ConfigError(
            f"unknown experiment {config.experiment!r}; known: {EXPERIMENT_NAMES}"
        )
    preset = _PRESETS[config.experiment]
    unknown = set(config.params) - set(preset.params)
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {config.experiment}: {sorted(unknown)}")
    params = {**preset.params, **config.params}
    trials = preset.trials if config.trials is None else int(config.trials)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    return preset, params, trials


def run(config: ExperimentConfig, out_dir) -> Report:
    """Execute one experiment and write report.json plus CSV tables to out_dir."""
    preset, params, trials = _resolve(config)
    start = time.perf_counter()
    records, tables, aggregates = preset.runner(params, trials, Rng(config.seed))
    wall = time.perf_counter() - start
    report = Report(
        config={
            "experiment": config.experiment,
            "seed": config.seed,
            "trials": trials,
            "params": _round12(params),
        },
        records=_round12(records),
        tables=_round12(tables),
        aggregates=_round12(aggregates),
        wall_clock_s=wall,
        version=__version__,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_json(report, out / "report.json")
    emit_csv(report.records, out / "trials.csv")
    for name, rows in report.tables.items():
        emit_csv(rows, out / f"{name}.csv")
    return report


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def emit_csv(rows: list, path) -> None:
    """Write records as CSV: header from the first row, 12-significant-digit floats."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not rows:
            return
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(row[key]) for key in header])


def emit_json(report: Report, path) -> None:
    """Write the full report as JSON (sorted keys, parseable by load_report)."""
    doc = {
        "config": report.config,
        "records": report.records,
        "tables": report.tables,
        "aggregates": report.aggregates,
        "wall_clock_s": report.wall_clock_s,
        "version": report.version,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_report(path) -> Report:
    doc = json.loads(Path(path).read_text())
    return Report(
        config=doc["config"],
        records=doc["records"],
        tables=doc["tables"],
        aggregates=doc["aggregates"],
        wall_clock_s=doc["wall_clock_s"],
        version=doc["version"],
    )
