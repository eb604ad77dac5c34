"""Simulated thermoelectric (Peltier) plate with hot/cold/idle targets.

The plate relaxes exponentially toward the active target temperature,
using the exact closed form rather than an Euler step so trajectories are
independent of step size: T' = target + (T - target) * exp(-dt / tau).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace

MODES = ("hot", "cold", "idle")


class ConfigError(ValueError):
    """Thermal configuration violates its ordering or range constraints."""


class StepError(ValueError):
    """Simulation step with a non-positive time delta."""


@dataclass(frozen=True)
class PeltierConfig:
    """Device parameters and target temperatures, all in degrees C / seconds.

    Defaults model a small TEC driven between safe skin-contact setpoints;
    the idle time constant is slower because the plate then drifts back to
    ambient passively instead of being driven.
    """

    model_name: str = "TEC1-03108"
    plate_size_mm: tuple[int, int] = (20, 20)
    tau_drive_s: float = 2.0
    tau_idle_s: float = 10.0
    ambient_c: float = 25.0
    hot_target_c: float = 40.0
    cold_target_c: float = 15.0
    clamp_range_c: tuple[float, float] = (0.0, 60.0)

    def __post_init__(self) -> None:
        if self.tau_drive_s <= 0 or self.tau_idle_s <= 0:
            raise ConfigError("time constants must be positive")
        if not (self.cold_target_c < self.ambient_c < self.hot_target_c):
            raise ConfigError(
                f"targets must satisfy cold < ambient < hot, got "
                f"{self.cold_target_c} / {self.ambient_c} / {self.hot_target_c}"
            )
        lo, hi = self.clamp_range_c
        if not (lo <= self.cold_target_c and self.hot_target_c <= hi):
            raise ConfigError(f"clamp range {self.clamp_range_c} must contain all targets")

    def target_for(self, mode: str) -> tuple[float, float]:
        """(target temperature, time constant) for a mode."""
        if mode == "hot":
            return self.hot_target_c, self.tau_drive_s
        if mode == "cold":
            return self.cold_target_c, self.tau_drive_s
        if mode == "idle":
            return self.ambient_c, self.tau_idle_s
        raise ConfigError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class ThermalState:
    plate_temp_c: float
    mode: str = "idle"
    sim_time_s: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")


def set_mode(state: ThermalState, mode: str) -> ThermalState:
    """Switch the drive mode; the plate temperature is continuous across the
    switch instant."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == state.mode:
        return state
    return replace(state, mode=mode)


def step(state: ThermalState, config: PeltierConfig, dt_s: float) -> ThermalState:
    """Advance the simulation by dt_s seconds of exponential relaxation
    toward the active mode's target, clamped to the configured range."""
    if dt_s <= 0:
        raise StepError(f"dt must be positive, got {dt_s}")
    target, tau = config.target_for(state.mode)
    temp = target + (state.plate_temp_c - target) * math.exp(-dt_s / tau)
    lo, hi = config.clamp_range_c
    temp = min(max(temp, lo), hi)
    return ThermalState(plate_temp_c=temp, mode=state.mode, sim_time_s=state.sim_time_s + dt_s)


def map_estimate_to_mode(estimate_c: float, thresholds: tuple[float, float] = (18.0, 27.0)) -> str:
    """Map an inferred ambient temperature to a drive mode: cold below the
    lower threshold, hot above the upper one, idle in between."""
    cold_below, hot_above = thresholds
    if cold_below >= hot_above:
        raise ConfigError(f"thresholds must be ordered (cold_below < hot_above), got {thresholds}")
    if estimate_c < cold_below:
        return "cold"
    if estimate_c > hot_above:
        return "hot"
    return "idle"


class ThermalSimulator:
    """Clock-owned simulation wrapper: one owner advances time with tick();
    mode requests from any thread are mailboxed and applied at the next
    step boundary; snapshots are safe from any thread."""

    def __init__(self, config: PeltierConfig | None = None, initial_mode: str = "idle"):
        self.config = config or PeltierConfig()
        self._state = ThermalState(plate_temp_c=self.config.ambient_c, mode=initial_mode)
        self._pending_mode: str | None = None
        self._lock = threading.Lock()

    def request_mode(self, mode: str) -> None:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        with self._lock:
            self._pending_mode = mode

    def apply_estimate(self, estimate_c: float, thresholds: tuple[float, float] = (18.0, 27.0)) -> str:
        mode = map_estimate_to_mode(estimate_c, thresholds)
        self.request_mode(mode)
        return mode

    def tick(self, dt_s: float) -> ThermalState:
        with self._lock:
            if self._pending_mode is not None:
                self._state = set_mode(self._state, self._pending_mode)
                self._pending_mode = None
            self._state = step(self._state, self.config, dt_s)
            return self._state

    def snapshot(self) -> ThermalState:
        with self._lock:
            return self._state
