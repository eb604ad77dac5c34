"""Ambient-temperature inference through a vision-language backend:
prompt construction, free-text reply parsing, and tolerance-based
evaluation of predictions against known temperatures.

Backends are pluggable: the remote backend talks to an inference service
over HTTP, the fixture backend replays scripted replies so everything is
testable without model weights.
"""

from __future__ import annotations

import base64
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import requests

VLM_URL_ENV = "HAPTICVLM_VLM_URL"

PLAUSIBLE_RANGE_C = (-50.0, 60.0)

_PROMPTS = {
    "default": (
        "Look at this photo of the surrounding space. Estimate the ambient "
        "temperature in the room in degrees Celsius. Reply with a single "
        "number or a narrow range."
    ),
}


class ParseError(ValueError):
    """No numeric temperature could be extracted from a reply."""

    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


class BackendError(RuntimeError):
    """Transport-level or protocol-level backend failure."""


class BackendTimeout(BackendError):
    """The backend did not reply within the query's timeout."""


class EmptyEvaluationError(ValueError):
    """Tolerance evaluation requires at least one case."""


def build_prompt(style: str = "default") -> str:
    """The canonical temperature query for a given prompt style;
    deterministic so fixture tests can match replies exactly."""
    try:
        return _PROMPTS[style]
    except KeyError:
        raise ValueError(f"unknown prompt style {style!r}; expected one of {sorted(_PROMPTS)}") from None


@dataclass(frozen=True)
class TemperatureQuery:
    image_ref: str | bytes
    prompt: str
    timeout_ms: int = 10000

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.timeout_ms <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout_ms}")


@dataclass(frozen=True)
class TemperatureEstimate:
    """Parsed temperature with the verbatim reply and which rule produced it."""

    celsius: float
    raw_text: str
    parse_rule: str  # single_value | range_midpoint | fahrenheit_converted


_NUM = r"[-+]?\d+(?:\.\d+)?"
_RANGE_PATTERNS = (
    re.compile(rf"between\s+({_NUM})\s+and\s+({_NUM})", re.IGNORECASE),
    re.compile(rf"({_NUM})\s*(?:–|—|−|-|to)\s*({_NUM})", re.IGNORECASE),
)
# degree context that is not Fahrenheit
_CELSIUS_AFTER = re.compile(
    rf"({_NUM})\s*(?:°\s*C\b|℃|°(?!\s*F)|C\b|celsius|degrees?\b(?!\s+f))",
    re.IGNORECASE,
)
_FAHRENHEIT_AFTER = re.compile(rf"({_NUM})\s*(?:°\s*F\b|℉|F\b|fahrenheit)", re.IGNORECASE)
_DEGREE_CONTEXT = re.compile(r"°|℃|℉|degrees?|celsius|fahrenheit|\b[CF]\b", re.IGNORECASE)
_FAHRENHEIT_CONTEXT = re.compile(r"°\s*F|℉|fahrenheit", re.IGNORECASE)
_BARE_NUMBER = re.compile(rf"^\s*({_NUM})\s*\.?\s*$")


def _fahrenheit_to_celsius(value: float) -> float:
    return (value - 32.0) * 5.0 / 9.0


def _clamp(value: float) -> float:
    lo, hi = PLAUSIBLE_RANGE_C
    return min(max(value, lo), hi)


def parse_temperature(raw_text: str) -> TemperatureEstimate:
    """Extract a Celsius temperature from a free-form reply.

    Rules, in priority order: an explicit range with degree context
    collapses to its midpoint (converted if the context is Fahrenheit); a
    number adjacent to a Celsius-ish degree marker is taken as-is; a number
    adjacent to a Fahrenheit marker is converted. A reply that is nothing
    but a bare number is accepted as Celsius. Results are clamped to the
    plausible ambient range so hallucinated magnitudes cannot poison
    downstream thermal targets.
    """
    for pattern in _RANGE_PATTERNS:
        match = pattern.search(raw_text)
        if match is None:
            continue
        window = raw_text[match.start() : match.end() + 24]
        if not _DEGREE_CONTEXT.search(window):
            continue
        lo, hi = float(match.group(1)), float(match.group(2))
        midpoint = (lo + hi) / 2.0
        if _FAHRENHEIT_CONTEXT.search(window):
            midpoint = _fahrenheit_to_celsius(midpoint)
        return TemperatureEstimate(_clamp(midpoint), raw_text, "range_midpoint")

    match = _CELSIUS_AFTER.search(raw_text)
    if match is not None:
        return TemperatureEstimate(_clamp(float(match.group(1))), raw_text, "single_value")

    match = _FAHRENHEIT_AFTER.search(raw_text)
    if match is not None:
        value = _fahrenheit_to_celsius(float(match.group(1)))
        return TemperatureEstimate(_clamp(value), raw_text, "fahrenheit_converted")

    match = _BARE_NUMBER.match(raw_text)
    if match is not None:
        return TemperatureEstimate(_clamp(float(match.group(1))), raw_text, "single_value")

    raise ParseError(f"no numeric temperature in reply: {raw_text!r}", raw_text)


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class VlmBackend(Protocol):
    def infer(self, prompt: str, image_ref: str | bytes, timeout_ms: int) -> str: ...


def _image_bytes(image_ref: str | bytes) -> bytes:
    if isinstance(image_ref, bytes):
        return image_ref
    path = Path(image_ref)
    if path.is_file():
        return path.read_bytes()
    # opaque reference without a file behind it: send the ref itself
    return str(image_ref).encode("utf-8")


class FixtureVlmBackend:
    """Scripted replies keyed by image_ref; a configured delay longer than
    the query timeout simulates a timeout deterministically."""

    def __init__(self, replies: dict[str, str], delay_ms: int = 0):
        self.replies = dict(replies)
        self.delay_ms = delay_ms

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureVlmBackend":
        replies = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            ref, sep, reply = line.partition("\t")
            if not sep:
                raise ValueError(f"fixture line needs 'image_ref<TAB>reply': {line!r}")
            replies[ref] = reply
        return cls(replies)

    def infer(self, prompt: str, image_ref: str | bytes, timeout_ms: int) -> str:
        if self.delay_ms > timeout_ms:
            raise BackendTimeout(f"fixture delayed {self.delay_ms} ms > timeout {timeout_ms} ms")
        key = image_ref if isinstance(image_ref, str) else image_ref.decode("utf-8", "replace")
        try:
            return self.replies[key]
        except KeyError:
            raise BackendError(f"no scripted reply for image_ref {key!r}") from None


class RemoteVlmBackend:
    """HTTP backend: POST {prompt, image: base64} to <url>/infer, read {text}."""

    def __init__(self, url: str | None = None):
        self.url = url or os.environ.get(VLM_URL_ENV)
        if not self.url:
            raise BackendError(f"no VLM endpoint configured ({VLM_URL_ENV} unset)")

    def infer(self, prompt: str, image_ref: str | bytes, timeout_ms: int) -> str:
        payload = {
            "prompt": prompt,
            "image": base64.b64encode(_image_bytes(image_ref)).decode("ascii"),
        }
        try:
            response = requests.post(
                self.url.rstrip("/") + "/infer", json=payload, timeout=timeout_ms / 1000.0
            )
        except requests.Timeout as exc:
            raise BackendTimeout(f"VLM backend timed out after {timeout_ms} ms") from exc
        except requests.RequestException as exc:
            raise BackendError(f"VLM backend transport failure: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"VLM backend returned HTTP {response.status_code}")
        try:
            text = response.json()["text"]
        except (ValueError, KeyError) as exc:
            raise BackendError(f"malformed VLM reply: {exc}") from exc
        return str(text)


def estimate_temperature(backend: VlmBackend, query: TemperatureQuery) -> TemperatureEstimate:
    """Send the query to the backend and parse its reply; the verbatim reply
    is preserved on the estimate."""
    reply = backend.infer(query.prompt, query.image_ref, query.timeout_ms)
    return parse_temperature(reply)


# ---------------------------------------------------------------------------
# Tolerance evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaseResult:
    predicted_c: float
    actual_c: float
    abs_error_c: float
    correct: bool


@dataclass(frozen=True)
class ToleranceEvaluation:
    cases: tuple[CaseResult, ...]
    tolerance_c: float
    accuracy: float


def evaluate_tolerance(
    cases: Sequence[tuple[float, float]], tolerance_c: float = 8.0
) -> ToleranceEvaluation:
    """Score (predicted, actual) pairs: a prediction is correct when its
    absolute error is at most the tolerance (boundary inclusive)."""
    if not cases:
        raise EmptyEvaluationError("no evaluation cases")
    if tolerance_c <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance_c}")
    results = []
    for predicted, actual in cases:
        error = abs(predicted - actual)
        results.append(CaseResult(predicted, actual, error, error <= tolerance_c))
    accuracy = sum(r.correct for r in results) / len(results)
    return ToleranceEvaluation(tuple(results), tolerance_c, accuracy)


def load_cases(source: str | Path | Iterable[str]) -> list[tuple[float, float]]:
    """Parse "predicted,actual" lines (one case per line, '#' comments)."""
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(source)
    cases = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'predicted,actual', got {line!r}")
        cases.append((float(parts[0]), float(parts[1])))
    return cases


def format_evaluation(evaluation: ToleranceEvaluation) -> str:
    """Human-readable report plus one machine-readable row per case."""
    lines = [
        f"tolerance: {evaluation.tolerance_c:g} C",
        f"accuracy:  {evaluation.accuracy:.4f} "
        f"({sum(r.correct for r in evaluation.cases)}/{len(evaluation.cases)})",
        "case,predicted_c,actual_c,abs_error_c,correct",
    ]
    for i, r in enumerate(evaluation.cases):
        lines.append(f"{i},{r.predicted_c:g},{r.actual_c:g},{r.abs_error_c:g},{int(r.correct)}")
    return "\n".join(lines)
