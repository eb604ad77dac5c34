#!/usr/bin/env python3
"""Temperature inference walkthrough: the canonical prompt, free-text reply
parsing, and the tolerance-based evaluation over the 15-case fixture."""

from hapticvlm.fixtures import TEMPERATURE_CASES
from hapticvlm.vlm import (
    FixtureVlmBackend,
    TemperatureQuery,
    build_prompt,
    estimate_temperature,
    evaluate_tolerance,
    format_evaluation,
    parse_temperature,
)

print("canonical prompt:")
print(" ", build_prompt())

# The parser handles single values, ranges (midpoint), and Fahrenheit.
print("\nparsing free-form replies:")
for reply in (
    "The room appears to be around 22°C.",
    "probably between 18 and 24 degrees Celsius",
    "I'd guess 68°F indoors.",
    "somewhere from 2-8°C tonight",
    "400°C in the furnace",  # clamped to the plausible ambient ceiling
):
    est = parse_temperature(reply)
    print(f"  {reply!r:55s} -> {est.celsius:6.2f} C  [{est.parse_rule}]")

# A scripted backend stands in for the real model.
backend = FixtureVlmBackend(
    {
        "warm_room.png": "Feels cozy, I'd say 28°C.",
        "cold_street.png": "Brisk! Between 2 and 8 degrees Celsius.",
    }
)
for ref in ("warm_room.png", "cold_street.png"):
    est = estimate_temperature(backend, TemperatureQuery(ref, build_prompt()))
    print(f"\n{ref}: {est.celsius:.1f} C   (raw reply: {est.raw_text!r})")

# Tolerance scoring: correct iff |predicted - actual| <= 8 C.
print("\nfixture evaluation (13 of 15 within the 8 C tolerance):")
print(format_evaluation(evaluate_tolerance(TEMPERATURE_CASES, 8.0)))
