"""Pattern registry and playback scheduling.

The engine owns its audio sink on a dedicated worker thread; commands can
be scheduled from any thread and are applied in order. Playback must never
crash a study session, so a failing sink is swapped for the null sink with
a logged warning.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .synth import (
    DEFAULT_SAMPLE_RATE,
    PATTERN_IDS,
    HapticPattern,
    SampleBuffer,
    default_pattern,
    synthesize,
)

logger = logging.getLogger(__name__)


class UnknownPatternError(KeyError):
    """An audio key is not present in the pattern registry."""


@dataclass(frozen=True)
class PlaybackCommand:
    """Request to start (or loop) the pattern behind an audio key."""

    audio_key: str
    gain: float = 1.0
    loop: bool = False
    issued_at_ms: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.gain <= 1.0):
            raise ValueError(f"gain must be within [0, 1], got {self.gain}")


class PatternRegistry:
    """Maps audio keys to haptic pattern definitions.

    File format: one mapping per line, "key = PATTERN_ID [param=value ...]",
    with '#' comments. Overrides apply on top of the pattern defaults.
    """

    def __init__(self, patterns: dict[str, HapticPattern]):
        self._patterns = dict(patterns)

    @classmethod
    def default(cls) -> "PatternRegistry":
        return cls({pid: default_pattern(pid) for pid in PATTERN_IDS})

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "PatternRegistry":
        patterns: dict[str, HapticPattern] = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, rest = line.partition("=")
            if not sep:
                raise ValueError(f"registry line {lineno}: expected 'key = PATTERN_ID ...'")
            key = key.strip()
            tokens = rest.split()
            if not tokens:
                raise ValueError(f"registry line {lineno}: missing pattern id")
            pattern_id, overrides = tokens[0], {}
            for token in tokens[1:]:
                name, sep, value = token.partition("=")
                if not sep:
                    raise ValueError(f"registry line {lineno}: bad override {token!r}")
                overrides[name] = float(value)
            duration = overrides.pop("duration_s", 2.0)
            patterns[key] = default_pattern(pattern_id, duration_s=duration, **overrides)
        return cls(patterns)

    @classmethod
    def from_file(cls, path: str | Path) -> "PatternRegistry":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)

    def get(self, audio_key: str) -> HapticPattern:
        try:
            return self._patterns[audio_key]
        except KeyError:
            raise UnknownPatternError(audio_key) from None

    def __contains__(self, audio_key: str) -> bool:
        return audio_key in self._patterns

    def keys(self) -> list[str]:
        return list(self._patterns)


class NullSink:
    """Silent sink for CI and headless hosts; records what it was asked to play."""

    def __init__(self) -> None:
        self.started: list[tuple[str, bool, float]] = []
        self.stopped = 0

    def start(self, audio_key: str, buffer: SampleBuffer, loop: bool, gain: float) -> None:
        self.started.append((audio_key, loop, gain))

    def stop(self) -> None:
        self.stopped += 1


class PlaybackHandle:
    """Tracks one scheduled command; `active` reflects loop state and the
    rendered duration against the engine clock."""

    def __init__(self, audio_key: str, loop: bool, duration_s: float, started_at: float,
                 clock: Callable[[], float]):
        self.audio_key = audio_key
        self.loop = loop
        self.duration_s = duration_s
        self.started_at = started_at
        self._clock = clock
        self._stopped = threading.Event()

    @property
    def active(self) -> bool:
        if self._stopped.is_set():
            return False
        if self.loop:
            return True
        return (self._clock() - self.started_at) < self.duration_s

    @property
    def stopped(self) -> bool:
        return self._stopped.is_set()

    def _mark_stopped(self) -> None:
        self._stopped.set()


@dataclass
class _Job:
    command: PlaybackCommand
    handle: PlaybackHandle
    done: threading.Event = field(default_factory=threading.Event)
    error: Exception | None = None


class PlaybackEngine:
    """Serializes playback commands onto the sink; a new command for a
    different key preempts whatever is playing."""

    def __init__(
        self,
        registry: PatternRegistry | None = None,
        sink=None,
        sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.registry = registry or PatternRegistry.default()
        self.sink = sink if sink is not None else NullSink()
        self.sample_rate_hz = sample_rate_hz
        self.clock = clock
        self._cache: dict[str, SampleBuffer] = {}
        self._queue: queue.Queue[_Job | None] = queue.Queue()
        self._current: PlaybackHandle | None = None
        self._worker = threading.Thread(target=self._run, name="playback", daemon=True)
        self._worker.start()

    def buffer_for(self, audio_key: str) -> SampleBuffer:
        if audio_key not in self._cache:
            self._cache[audio_key] = synthesize(self.registry.get(audio_key), self.sample_rate_hz)
        return self._cache[audio_key]

    def schedule_playback(self, command: PlaybackCommand) -> PlaybackHandle:
        """Start (or loop) the pattern for the command's audio key.

        Blocks until the worker has applied the command, so the returned
        handle already reflects the engine state. Raises UnknownPatternError
        for keys outside the registry.
        """
        pattern = self.registry.get(command.audio_key)  # fail fast before queueing
        handle = PlaybackHandle(
            audio_key=command.audio_key,
            loop=command.loop,
            duration_s=pattern.duration_s,
            started_at=0.0,
            clock=self.clock,
        )
        job = _Job(command=command, handle=handle)
        self._queue.put(job)
        job.done.wait()
        if job.error is not None:
            raise job.error
        return handle

    def stop(self) -> None:
        """Stop the current playback, leaving the engine usable."""
        job = _Job(command=None, handle=None)  # type: ignore[arg-type]
        self._queue.put(job)
        job.done.wait()

    def shutdown(self) -> None:
        self._queue.put(None)
        self._worker.join(timeout=5.0)

    @property
    def current(self) -> PlaybackHandle | None:
        return self._current

    # -- worker ------------------------------------------------------------

    def _run(self) -> None:
        while True:
            job = self._queue.get()
            if job is None:
                self._stop_current()
                return
            try:
                if job.command is None:
                    self._stop_current()
                else:
                    self._apply(job)
            except Exception as exc:  # surfaced to the scheduling caller
                job.error = exc
            finally:
                job.done.set()

    def _stop_current(self) -> None:
        if self._current is not None:
            self._current._mark_stopped()
            self._safe_sink(lambda: self.sink.stop())
            self._current = None

    def _apply(self, job: _Job) -> None:
        buffer = self.buffer_for(job.command.audio_key)
        self._stop_current()
        job.handle.started_at = self.clock()
        self._safe_sink(
            lambda: self.sink.start(job.command.audio_key, buffer, job.command.loop, job.command.gain)
        )
        self._current = job.handle

    def _safe_sink(self, action: Callable[[], None]) -> None:
        try:
            action()
        except Exception:
            logger.warning("audio sink failed; falling back to null sink", exc_info=True)
            self.sink = NullSink()
