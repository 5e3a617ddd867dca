"""Client for probing chat-completions endpoints with Boolean prompts.

Renders prompts to plain text, POSTs them to any chat-completions-style
HTTP endpoint with retry/backoff, parses the first standalone 0/1 token out
of the completion, and scores agreement against the copy-bit and
majority-of-three rules with bootstrap confidence intervals.  The API key
is read from the environment and never appears in reports or logs.

The default prompt wording is an approximation of the original protocol's
(unpublished) template and can be overridden wholesale.
"""

from __future__ import annotations

import json
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import httpx
import numpy as np

from .boolfun import BooleanPrompt
from .errors import AlignmentError, EndpointError, ProtocolError, TemplateError
from .errors import TransportError as ProbeTransportError
from .numerics import Rng

__all__ = [
    "ProbeConfig",
    "ProbeResult",
    "DEFAULT_TEMPLATE",
    "API_KEY_ENV_VAR",
    "render_prompt",
    "parse_label",
    "request_completion",
    "query_model",
    "run_probe",
    "score_run",
    "SCORE_CSV_COLUMNS",
]

API_KEY_ENV_VAR = "OCCAM_ICL_API_KEY"

DEFAULT_TEMPLATE = (
    "Each input below is a row of bits. Apply the hidden rule and answer with a single bit.\n\n"
    "{examples}\n{query}"
)

SCORE_CSV_COLUMNS = [
    "n_examples",
    "d",
    "mode",
    "agree_simple_mean",
    "agree_simple_lo",
    "agree_simple_hi",
    "agree_complex_mean",
    "agree_complex_lo",
    "agree_complex_hi",
    "unparseable_rate",
]

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})
_LABEL_PATTERN = re.compile(r"\b[01]\b")
_NAN = float("nan")


@dataclass
class ProbeConfig:
    """Connection settings; api_key defaults to the environment and never serializes."""

    endpoint_url: str
    model_name: str
    api_key: str | None = field(default=None, repr=False)
    timeout: float = 30.0
    max_retries: int = 3
    temperature: float = 0.0
    backoff_base: float = 0.5  # seconds; doubles per retry

    def __post_init__(self):
        if self.api_key is None:
            self.api_key = os.environ.get(API_KEY_ENV_VAR)

    def public_fields(self) -> dict:
        """Everything serializable about this config (the key is omitted)."""
        return {
            "endpoint_url": self.endpoint_url,
            "model_name": self.model_name,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "temperature": self.temperature,
        }


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of one prompt; agree flags are None when the label is unparseable."""

    prompt_id: int
    raw_completion: str
    parsed_label: int | None
    agree_simple: bool | None
    agree_complex: bool | None
    retries_used: int = 0


def render_prompt(prompt: BooleanPrompt, template: str = DEFAULT_TEMPLATE) -> str:
    """Deterministic text rendering with space-separated bits.

    The template must contain both an {examples} and a {query} slot.
    Examples render as "Input: b1 ... bd" / "Output: y" pairs and the query
    as an "Input:" line with a trailing "Output:" cue.
    """
    if "{examples}" not in template or "{query}" not in template:
        raise TemplateError("template needs both {examples} and {query} slots")
    lines = []
    for bits, label in prompt.examples:
        lines.append("Input: " + " ".join(str(int(b)) for b in bits))
        lines.append(f"Output: {int(label)}")
    query = "Input: " + " ".join(str(int(b)) for b in prompt.query) + "\nOutput:"
    return template.format(examples="\n".join(lines), query=query)


def parse_label(completion: str) -> int | None:
    """First standalone 0/1 token of the completion, or None."""
    match = _LABEL_PATTERN.search(completion)
    return int(match.group(0)) if match else None


def request_completion(cfg: ProbeConfig, text: str, transport=None) -> tuple:
    """POST one chat-completions request; returns (completion, retries_used).

    Retries transport failures and HTTP 429/5xx with exponential backoff up
    to cfg.max_retries; other non-2xx statuses fail immediately.  A missing
    or malformed completion raises ProtocolError.
    """
    body = {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": text}],
        "temperature": cfg.temperature,
        "max_tokens": 4,
    }
    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"

    last_status = None
    last_error = ""
    with httpx.Client(timeout=cfg.timeout, transport=transport) as client:
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                time.sleep(cfg.backoff_base * 2 ** (attempt - 1))
            try:
                response = client.post(cfg.endpoint_url, json=body, headers=headers)
            except httpx.TransportError as exc:
                last_status = None
                last_error = str(exc)
                continue
            last_status = response.status_code
            if response.status_code in _RETRYABLE_STATUS:
                continue
            if not 200 <= response.status_code < 300:
                raise EndpointError(response.status_code, response.text[:200])
            return _extract_completion(response), attempt
    if last_status is not None:
        raise EndpointError(last_status, "retries exhausted")
    raise ProbeTransportError(f"transport failed after {cfg.max_retries} retries: {last_error}")


def _extract_completion(response: httpx.Response) -> str:
    try:
        payload = response.json()
    except (json.JSONDecodeError, ValueError) as exc:
        raise ProtocolError(f"response body is not JSON: {exc}") from exc
    try:
        completion = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"completion field missing from response: {exc}") from exc
    if not isinstance(completion, str):
        raise ProtocolError("completion content is not a string")
    return completion


def query_model(cfg: ProbeConfig, text: str, transport=None) -> str:
    """One completion string for one rendered prompt (see request_completion)."""
    return request_completion(cfg, text, transport)[0]


def _probe_one(cfg, prompt_id, prompt, template, transport) -> ProbeResult:
    raw, retries = request_completion(cfg, render_prompt(prompt, template), transport)
    label = parse_label(raw)
    if label is None:
        return ProbeResult(prompt_id, raw, None, None, None, retries)
    return ProbeResult(
        prompt_id,
        raw,
        label,
        label == prompt.simple_label,
        label == prompt.complex_label,
        retries,
    )


def run_probe(
    cfg: ProbeConfig,
    prompts,
    template: str = DEFAULT_TEMPLATE,
    transport=None,
    max_in_flight: int = 4,
) -> list:
    """Query every prompt, concurrently up to max_in_flight, ordered by prompt id."""
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be >= 1")
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = [
            pool.submit(_probe_one, cfg, i, p, template, transport)
            for i, p in enumerate(prompts)
        ]
        results = [f.result() for f in futures]
    return sorted(results, key=lambda r: r.prompt_id)

def _bootstrap_interval(values: np.ndarray, rng: Rng, n_resamples: int) -> tuple:
    if values.size == 0:
        return _NAN, _NAN
    means = np.empty(n_resamples)
    for b in range(n_resamples):
        means[b] = values[rng.gen.integers(0, values.size, size=values.size)].mean()
    return float(np.percentile(means, 2.5)), float(np.percentile(means, 97.5))


def score_run(prompts, results, n_resamples: int = 100, rng: Rng | None = None) -> list:
    """Per-(n_examples, d, mode) accuracy table with 95% bootstrap intervals.

    Unparseable completions are reported as a separate rate and excluded
    from the accuracy denominators.  Scoring is deterministic for a fixed
    rng seed and idempotent; prompts and results must align by id.
    """
    if rng is None:
        rng = Rng(0)
    if len(prompts) != len(results):
        raise AlignmentError(f"{len(prompts)} prompts vs {len(results)} results")
    for i, result in enumerate(results):
        if result.prompt_id != i:
            raise AlignmentError(f"result at position {i} has prompt_id {result.prompt_id}")

    groups: dict = {}
    for prompt, result in zip(prompts, results):
        key = (len(prompt.examples), prompt.dim, prompt.mode)
        groups.setdefault(key, []).append(result)

    rows = []
    for g, key in enumerate(sorted(groups)):
        outcomes = groups[key]
        parsed = [r for r in outcomes if r.parsed_label is not None]
        simple = np.array([float(r.agree_simple) for r in parsed])
        complex_ = np.array([float(r.agree_complex) for r in parsed])
        sub = rng.substream(g)
        s_lo, s_hi = _bootstrap_interval(simple, sub, n_resamples)
        c_lo, c_hi = _bootstrap_interval(complex_, sub, n_resamples)
        rows.append(
            {
                "n_examples": key[0],
                "d": key[1],
                "mode": key[2],
                "agree_simple_mean": float(simple.mean()) if parsed else _NAN,
                "agree_simple_lo": s_lo,
                "agree_simple_hi": s_hi,
                "agree_complex_mean": float(complex_.mean()) if parsed else _NAN,
                "agree_complex_lo": c_lo,
                "agree_complex_hi": c_hi,
                "unparseable_rate": 1.0 - len(parsed) / len(outcomes),
            }
        )
    return rows
