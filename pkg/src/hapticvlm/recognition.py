"""Streaming frame-to-material classification with a pluggable encoder
backend, majority-vote smoothing, and edge-triggered audio dispatch.

The pipeline is a single-producer, single-consumer arrangement: frames
enter a bounded queue (oldest dropped when full, freshness beats
completeness), one worker classifies and dispatches, and any number of
subscribers observe the event stream.
"""

from __future__ import annotations

import base64
import threading
import time
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from queue import SimpleQueue
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np
import requests

from .embeddings import (
    DegenerateVectorError,
    DimensionError,
    EmbeddingDatabase,
    MatchResult,
    as_embedding,
    match_material,
)
from .playback import PatternRegistry, PlaybackCommand, UnknownPatternError

DEFAULT_MASK_FRACTION = 0.5
DEFAULT_QUEUE_CAPACITY = 8
DEFAULT_SMOOTHING_WINDOW = 5
DEFAULT_MIN_AGREEMENT = 3


class EncoderError(RuntimeError):
    """Per-frame encoder failure; the stream continues."""


@dataclass(frozen=True)
class MaskSpec:
    """Region-of-interest mask: either a centered rectangle covering a
    fraction of the frame, or an explicit binary bitmap."""

    kind: str  # centered_rect | explicit_bitmap
    fraction: float | None = None
    bitmap: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind == "centered_rect":
            if self.fraction is None or not (0.0 < self.fraction <= 1.0):
                raise ValueError(f"centered_rect fraction must be in (0, 1], got {self.fraction}")
        elif self.kind == "explicit_bitmap":
            if self.bitmap is None:
                raise ValueError("explicit_bitmap requires a bitmap")
            grid = np.asarray(self.bitmap)
            if grid.ndim != 2 or not np.isin(grid, (0, 1)).all():
                raise ValueError("bitmap must be a 2-D binary grid")
            grid = grid.astype(np.uint8)
            grid.setflags(write=False)
            object.__setattr__(self, "bitmap", grid)
        else:
            raise ValueError(f"unknown mask kind {self.kind!r}")

    def to_json(self) -> dict:
        if self.kind == "centered_rect":
            return {"kind": self.kind, "fraction": self.fraction}
        return {"kind": self.kind, "bitmap": self.bitmap.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "MaskSpec":
        if data.get("kind") == "centered_rect":
            return cls(kind="centered_rect", fraction=float(data["fraction"]))
        return cls(kind="explicit_bitmap", bitmap=np.asarray(data["bitmap"]))


def default_mask() -> MaskSpec:
    """Centered rectangle over half the frame: the material of interest is
    assumed to occupy a prominent central position."""
    return MaskSpec(kind="centered_rect", fraction=DEFAULT_MASK_FRACTION)


@dataclass(frozen=True)
class FrameDescriptor:
    frame_id: int
    timestamp_ms: int
    image_ref: str | bytes
    mask: MaskSpec = field(default_factory=default_mask)


@dataclass(frozen=True)
class RecognitionEvent:
    """Raw per-frame match plus, once smoothing has run, the stabilized
    material and its audio key. audio_key is present exactly when the
    smoothed material exists and is found in the database."""

    frame_id: int
    match: MatchResult | None
    smoothed_material: str | None = None
    audio_key: str | None = None
    latency_ms: int = 0
    error: str | None = None

    @property
    def material(self) -> str | None:
        return self.match.material if self.match is not None else None


# ---------------------------------------------------------------------------
# Encoder backends
# ---------------------------------------------------------------------------


class EncoderBackend(Protocol):
    dimension: int

    def encode(self, image_ref: str | bytes, mask: MaskSpec) -> np.ndarray: ...


class FixtureEncoder:
    """Deterministic table lookup: image_ref -> embedding vector.

    Built either directly from vectors or from a table file of
    "image_ref<TAB>material_name" lines resolved against a database's
    stored embeddings.
    """

    def __init__(self, dimension: int, table: dict[str, np.ndarray]):
        self.dimension = dimension
        self.table = {ref: np.asarray(vec, dtype=np.float64) for ref, vec in table.items()}

    @classmethod
    def from_table_lines(cls, db: EmbeddingDatabase, lines: Iterable[str]) -> "FixtureEncoder":
        vectors = {rec.name: rec.embedding for rec in db.records}
        table = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            ref, sep, material = line.partition("\t")
            if not sep:
                raise ValueError(f"table line {lineno} needs 'image_ref<TAB>material': {line!r}")
            material = material.strip()
            if material not in vectors:
                raise ValueError(f"table line {lineno}: material {material!r} not in database")
            table[ref] = vectors[material]
        return cls(db.dimension, table)

    @classmethod
    def from_table_file(cls, db: EmbeddingDatabase, path: str | Path) -> "FixtureEncoder":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_table_lines(db, fh)

    def encode(self, image_ref: str | bytes, mask: MaskSpec) -> np.ndarray:
        key = image_ref if isinstance(image_ref, str) else image_ref.decode("utf-8", "replace")
        try:
            return self.table[key]
        except KeyError:
            raise EncoderError(f"no fixture embedding for image_ref {key!r}") from None


def _image_bytes(image_ref: str | bytes) -> bytes:
    if isinstance(image_ref, bytes):
        return image_ref
    path = Path(image_ref)
    if path.is_file():
        return path.read_bytes()
    return str(image_ref).encode("utf-8")


class RemoteEncoder:
    """HTTP backend: POST {image: base64, mask} to <url>/encode and read
    {embedding: [...]}; any transport error, non-200, or wrong dimension
    is an EncoderError."""

    def __init__(self, url: str, dimension: int, timeout_s: float = 5.0):
        self.url = url
        self.dimension = dimension
        self.timeout_s = timeout_s

    def encode(self, image_ref: str | bytes, mask: MaskSpec) -> np.ndarray:
        payload = {
            "image": base64.b64encode(_image_bytes(image_ref)).decode("ascii"),
            "mask": mask.to_json(),
        }
        try:
            response = requests.post(
                self.url.rstrip("/") + "/encode", json=payload, timeout=self.timeout_s
            )
        except requests.RequestException as exc:
            raise EncoderError(f"encoder transport failure: {exc}") from exc
        if response.status_code != 200:
            raise EncoderError(f"encoder returned HTTP {response.status_code}")
        try:
            vector = np.asarray(response.json()["embedding"], dtype=np.float64)
        except (ValueError, KeyError, TypeError) as exc:
            raise EncoderError(f"malformed encoder reply: {exc}") from exc
        if vector.ndim != 1 or vector.size != self.dimension:
            raise EncoderError(
                f"encoder returned dimension {vector.shape}, expected ({self.dimension},)"
            )
        return vector


# ---------------------------------------------------------------------------
# Per-frame classification
# ---------------------------------------------------------------------------


def classify_frame(
    backend: EncoderBackend,
    db: EmbeddingDatabase,
    frame: FrameDescriptor,
    threshold: float = 0.0,
    clock: Callable[[], float] = time.monotonic,
) -> RecognitionEvent:
    """Encode the masked frame and match it against the database.

    Encoder failures (including degenerate vectors it may emit) become
    events carrying an error instead of aborting the stream. Latency spans
    encode plus match, measured with the supplied clock.
    """
    start = clock()
    try:
        vector = backend.encode(frame.image_ref, frame.mask)
        result = match_material(db, vector, threshold)
        error = None
    except (EncoderError, DegenerateVectorError, DimensionError) as exc:
        result = None
        error = str(exc)
    latency_ms = max(0, round((clock() - start) * 1000.0))
    return RecognitionEvent(frame_id=frame.frame_id, match=result, latency_ms=latency_ms, error=error)


class StreamSmoother:
    """Majority vote over a trailing window of raw per-frame materials.

    The smoothed material is the modal material of the window if its count
    reaches min_agreement, otherwise the previous smoothed value carries
    forward (initially none). Modal ties break toward the previous smoothed
    value, then toward earliest first appearance in the window.
    """

    def __init__(self, window: int = DEFAULT_SMOOTHING_WINDOW, min_agreement: int = DEFAULT_MIN_AGREEMENT):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        if not (1 <= min_agreement <= window):
            raise ValueError(f"min_agreement must be in [1, window], got {min_agreement}")
        self.window = window
        self.min_agreement = min_agreement
        self._recent: deque[str | None] = deque(maxlen=window)
        self._smoothed: str | None = None

    def update(self, material: str | None) -> str | None:
        self._recent.append(material)
        observed = [m for m in self._recent if m is not None]
        if observed:
            counts = Counter(observed)
            top = max(counts.values())
            if top >= self.min_agreement:
                candidates = [m for m, c in counts.items() if c == top]
                if self._smoothed not in candidates:
                    first_seen: dict[str, int] = {}
                    for i, m in enumerate(observed):
                        first_seen.setdefault(m, i)
                    self._smoothed = min(candidates, key=first_seen.__getitem__)
        return self._smoothed

    @property
    def smoothed(self) -> str | None:
        return self._smoothed


def smooth_stream(
    events: Sequence[RecognitionEvent],
    window: int = DEFAULT_SMOOTHING_WINDOW,
    min_agreement: int = DEFAULT_MIN_AGREEMENT,
    db: EmbeddingDatabase | None = None,
) -> list[RecognitionEvent]:
    """Pure smoothing pass over an event sequence; with a database the
    smoothed material's audio key is attached to each event."""
    smoother = StreamSmoother(window, min_agreement)
    out = []
    for event in events:
        smoothed = smoother.update(event.material)
        audio_key = db.audio_key_for(smoothed) if (db is not None and smoothed is not None) else None
        out.append(replace(event, smoothed_material=smoothed, audio_key=audio_key))
    return out


class AudioDispatcher:
    """Edge-triggered playback dispatch: a command is emitted only when the
    smoothed material changes, so an ongoing texture is never restarted."""

    def __init__(self, db: EmbeddingDatabase, registry: PatternRegistry | None = None,
                 clock_ms: Callable[[], int] | None = None):
        self.db = db
        self.registry = registry
        self._clock_ms = clock_ms or (lambda: int(time.monotonic() * 1000))
        self._last_material: str | None = None

    def dispatch(self, event: RecognitionEvent) -> PlaybackCommand | None:
        material = event.smoothed_material
        if material == self._last_material:
            return None
        self._last_material = material
        if material is None:
            return None
        audio_key = event.audio_key or self.db.audio_key_for(material)
        if audio_key is None:
            return None
        if self.registry is not None and audio_key not in self.registry:
            raise UnknownPatternError(audio_key)
        return PlaybackCommand(audio_key=audio_key, loop=True, issued_at_ms=self._clock_ms())


# ---------------------------------------------------------------------------
# Streaming pipeline
# ---------------------------------------------------------------------------


class RecognitionPipeline:
    """Bounded-queue classifier worker with broadcast event delivery.

    submit() never blocks the frame source: when the queue is full the
    oldest frame is dropped and counted. Subscribers each get an unbounded
    event queue; subscription is safe from any thread.
    """

    def __init__(
        self,
        backend: EncoderBackend,
        db: EmbeddingDatabase,
        threshold: float = 0.0,
        window: int = DEFAULT_SMOOTHING_WINDOW,
        min_agreement: int = DEFAULT_MIN_AGREEMENT,
        capacity: int = DEFAULT_QUEUE_CAPACITY,
        registry: PatternRegistry | None = None,
        on_command: Callable[[PlaybackCommand], None] | None = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        if backend.dimension != db.dimension:
            raise DimensionError(
                f"encoder dimension {backend.dimension} != database dimension {db.dimension}"
            )
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.backend = backend
        self.db = db
        self.threshold = threshold
        self.clock = clock
        self.on_command = on_command
        self._smoother = StreamSmoother(window, min_agreement)
        self._dispatcher = AudioDispatcher(db, registry)
        self._capacity = capacity
        self._pending: deque[FrameDescriptor] = deque()
        self._lock = threading.Lock()
        self._frames_ready = threading.Event()
        self._stop = threading.Event()
        self._subscribers: list[SimpleQueue] = []
        self._last_frame_id: int | None = None
        self.dropped_frames = 0
        self._worker: threading.Thread | None = None

    # -- producer side -------------------------------------------------------

    def submit(self, frame: FrameDescriptor) -> None:
        with self._lock:
            if self._last_frame_id is not None and frame.frame_id <= self._last_frame_id:
                raise ValueError(
                    f"frame_id must be strictly increasing: {frame.frame_id} after {self._last_frame_id}"
                )
            self._last_frame_id = frame.frame_id
            if len(self._pending) >= self._capacity:
                self._pending.popleft()
                self.dropped_frames += 1
            self._pending.append(frame)
        self._frames_ready.set()

    # -- consumer side --------------------------------------------------------

    def subscribe(self) -> SimpleQueue:
        queue: SimpleQueue = SimpleQueue()
        with self._lock:
            self._subscribers.append(queue)
        return queue

    def start(self) -> None:
        if self._worker is not None:
            raise RuntimeError("pipeline already started")
        self._stop.clear()
        self._worker = threading.Thread(target=self._run, name="recognition", daemon=True)
        self._worker.start()

    def stop(self, drain: bool = True) -> None:
        """Stop the worker; with drain=True, queued frames are processed first."""
        if self._worker is None:
            return
        if drain:
            while True:
                with self._lock:
                    if not self._pending:
                        break
                time.sleep(0.001)
        self._stop.set()
        self._frames_ready.set()
        self._worker.join(timeout=5.0)
        self._worker = None

    def _next_frame(self) -> FrameDescriptor | None:
        while not self._stop.is_set():
            with self._lock:
                if self._pending:
                    return self._pending.popleft()
                self._frames_ready.clear()
            self._frames_ready.wait(timeout=0.05)
        with self._lock:
            return self._pending.popleft() if self._pending else None

    def _run(self) -> None:
        while True:
            frame = self._next_frame()
            if frame is None:
                return
            event = self._process(frame)
            with self._lock:
                subscribers = list(self._subscribers)
            for queue in subscribers:
                queue.put(event)

    def _process(self, frame: FrameDescriptor) -> RecognitionEvent:
        event = classify_frame(self.backend, self.db, frame, self.threshold, self.clock)
        smoothed = self._smoother.update(event.material)
        audio_key = self.db.audio_key_for(smoothed) if smoothed is not None else None
        event = replace(event, smoothed_material=smoothed, audio_key=audio_key)
        command = self._dispatcher.dispatch(event)
        if command is not None and self.on_command is not None:
            self.on_command(command)
        return event

    # -- synchronous convenience ----------------------------------------------

    def run_frames(self, frames: Iterable[FrameDescriptor]) -> list[RecognitionEvent]:
        """Classify frames on the calling thread (no worker) and return the
        event stream; smoothing and dispatch state advance exactly as in
        threaded operation."""
        return [self._process(frame) for frame in frames]
