"""HTTP service exposing the full engine to the experimenter UI and CLI:
study sessions with durable trial logs, haptic playback, the thermal
simulator, material recognition, and temperature inference.

Sessions survive process death: every acknowledged response is fsynced to
its session log, and on startup all logs in the log directory are reloaded
so a restarted service resumes each session at the correct trial.
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .config import AppConfig
from .embeddings import (
    DegenerateVectorError,
    DimensionError,
    EmbeddingDatabase,
    load_database,
    match_material,
)
from .playback import NullSink, PatternRegistry, PlaybackCommand, PlaybackEngine, UnknownPatternError
from .recognition import EncoderError, FixtureEncoder, RemoteEncoder, default_mask
from .study import (
    CONDITION_LABELS,
    PatternCondition,
    SequenceError,
    SessionLog,
    TrialRecord,
    confusion_counts,
    confusion_matrix,
    summarize,
)
from .thermal import PeltierConfig, ThermalSimulator
from .vlm import (
    BackendError,
    BackendTimeout,
    FixtureVlmBackend,
    ParseError,
    RemoteVlmBackend,
    TemperatureQuery,
    build_prompt,
    estimate_temperature,
)

THERMAL_TICK_S = 0.05


class SessionCompleteError(RuntimeError):
    """All 50 trials of the session have been presented and answered."""


class ProtocolError(RuntimeError):
    """A response arrived without a pending presented trial."""


class UnknownSessionError(KeyError):
    pass


@dataclass
class Session:
    """Server-side session state: the durable log plus the volatile
    presented-but-unanswered flag."""

    log: SessionLog
    pending: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def view(self) -> dict:
        return {
            "session_id": self.log.session_id,
            "participant_id": self.log.participant_id,
            "seed": self.log.seed,
            "cursor": self.log.cursor,
            "status": "complete" if self.log.complete else "active",
        }


def _build_backends(config: AppConfig, db: EmbeddingDatabase | None):
    if config.encoder_backend == "url":
        encoder = RemoteEncoder(config.encoder_url, dimension=db.dimension if db else 0,
                                timeout_s=config.encoder_timeout_s)
    elif config.encoder_fixture_file and db is not None:
        encoder = FixtureEncoder.from_table_file(db, config.encoder_fixture_file)
    else:
        encoder = None
    if config.vlm_backend == "url":
        vlm = RemoteVlmBackend(config.vlm_url)
    elif config.vlm_fixture_file:
        vlm = FixtureVlmBackend.from_file(config.vlm_fixture_file)
    else:
        vlm = None
    return encoder, vlm


class HapticService:
    """Application core behind the HTTP surface; also usable directly from
    Python (the HTTP layer adds no behavior of its own)."""

    def __init__(self, config: AppConfig):
        self.config = config
        self.db = load_database(config.database_path) if config.database_path else None
        registry = (
            PatternRegistry.from_file(config.registry_path)
            if config.registry_path
            else PatternRegistry.default()
        )
        self.engine = PlaybackEngine(registry=registry, sink=NullSink())
        self.thermal = ThermalSimulator(
            PeltierConfig(
                tau_drive_s=config.thermal_tau_drive_s,
                tau_idle_s=config.thermal_tau_idle_s,
                ambient_c=config.thermal_ambient_c,
                hot_target_c=config.thermal_hot_target_c,
                cold_target_c=config.thermal_cold_target_c,
                clamp_range_c=(config.thermal_clamp_min_c, config.thermal_clamp_max_c),
            )
        )
        self.encoder, self.vlm = _build_backends(config, self.db)
        self.log_dir = Path(config.log_dir) if config.log_dir else None
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._clock_stop = threading.Event()
        self._clock = threading.Thread(target=self._advance_thermal, name="thermal-clock", daemon=True)
        self._clock.start()
        if self.log_dir is not None:
            self._restore_sessions()

    # -- lifecycle -----------------------------------------------------------

    def close(self) -> None:
        self._clock_stop.set()
        self._clock.join(timeout=2.0)
        self.engine.shutdown()

    def _advance_thermal(self) -> None:
        previous = time.monotonic()
        while not self._clock_stop.wait(THERMAL_TICK_S):
            now = time.monotonic()
            self.thermal.tick(now - previous)
            previous = now

    def _restore_sessions(self) -> None:
        for path in sorted(self.log_dir.glob("*.log")):
            log = SessionLog.open(path)
            self.sessions[log.session_id] = Session(log=log)

    # -- study sessions --------------------------------------------------------

    def create_session(self, participant_id: str, seed: int) -> dict:
        if not participant_id:
            raise ValueError("participant_id must be non-empty")
        if self.log_dir is None:
            raise ValueError("service has no log.dir configured; sessions are unavailable")
        session_id = uuid.uuid4().hex[:12]
        log = SessionLog.create(self.log_dir / f"{session_id}.log", session_id, participant_id, int(seed))
        session = Session(log=log)
        with self._sessions_lock:
            self.sessions[session_id] = session
        return session.view

    def _session(self, session_id: str) -> Session:
        with self._sessions_lock:
            try:
                return self.sessions[session_id]
            except KeyError:
                raise UnknownSessionError(session_id) from None

    def next_trial(self, session_id: str) -> dict:
        """Present the trial at the cursor: loop its vibration pattern, drive
        the thermal mode, and return the condition (experimenter-only)."""
        session = self._session(session_id)
        with session.lock:
            if session.log.complete:
                raise SessionCompleteError(f"session {session_id} already has all 50 responses")
            index = session.log.cursor
            condition = session.log.plan.trials[index]
            self.engine.schedule_playback(
                PlaybackCommand(audio_key=condition.vibration, loop=True,
                                issued_at_ms=int(time.time() * 1000))
            )
            self.thermal.request_mode("hot" if condition.thermal == "h" else "cold")
            session.pending = True
            return {"trial_index": index, "presented": condition.label, "experimenter_only": True}

    def record_response(self, session_id: str, trial_index: int, perceived_label: str) -> dict:
        session = self._session(session_id)
        perceived = PatternCondition.parse(perceived_label)
        with session.lock:
            log = session.log
            # crash-safe client retry: identical answer for the already-recorded
            # latest trial is acknowledged without a second row
            if trial_index == log.cursor - 1 and log.records and log.records[-1].perceived == perceived:
                return {"ack": True, "duplicate": True, "cursor": log.cursor}
            if not session.pending:
                raise ProtocolError("no presented trial awaits a response")
            if trial_index != log.cursor:
                raise SequenceError(f"expected response for trial {log.cursor}, got {trial_index}")
            record = TrialRecord(
                participant_id=log.participant_id,
                trial_index=trial_index,
                presented=log.plan.trials[trial_index],
                perceived=perceived,
                timestamp_ms=int(time.time() * 1000),
            )
            log.append(record)
            session.pending = False
            if log.complete:
                self.engine.stop()
                self.thermal.request_mode("idle")
            return {"ack": True, "duplicate": False, "cursor": log.cursor}

    def results(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            records = session.log.records
            counts = confusion_counts(records)
            payload = {
                **session.view,
                "labels": list(CONDITION_LABELS),
                "counts": counts.tolist(),
                "proportions": None,
                "summary": None,
            }
            if np.all(counts.sum(axis=1) > 0):
                matrix = confusion_matrix(records)
                summary = summarize(matrix)
                payload["proportions"] = matrix.proportions.tolist()
                payload["summary"] = {
                    "mean_diagonal": summary.mean_diagonal,
                    "best_label": summary.best_label,
                    "best_value": summary.best_value,
                    "worst_label": summary.worst_label,
                    "worst_value": summary.worst_value,
                }
            return payload

    # -- device endpoints --------------------------------------------------------

    def play(self, pattern_key: str, loop: bool = True, gain: float = 1.0) -> dict:
        handle = self.engine.schedule_playback(
            PlaybackCommand(audio_key=pattern_key, loop=loop, gain=gain,
                            issued_at_ms=int(time.time() * 1000))
        )
        return {"playing": handle.audio_key, "loop": handle.loop}

    def thermal_state(self) -> dict:
        state = self.thermal.snapshot()
        return {"plate_temp_c": state.plate_temp_c, "mode": state.mode, "sim_time_s": state.sim_time_s}

    def set_thermal_mode(self, mode: str) -> dict:
        self.thermal.request_mode(mode)
        return {"requested_mode": mode}

    def recognize(self, image_ref: str) -> dict:
        if self.encoder is None or self.db is None:
            raise ValueError("recognition requires a database and an encoder backend")
        vector = self.encoder.encode(image_ref, default_mask())
        result = match_material(self.db, vector, self.config.match_threshold)
        if result is None:
            return {"match": None}
        return {
            "match": {
                "material": result.material,
                "similarity": result.similarity,
                "audio_key": self.db.audio_key_for(result.material),
            },
            "ranked_candidates": [[name, sim] for name, sim in result.ranked_candidates],
        }

    def estimate(self, image_ref: str) -> dict:
        if self.vlm is None:
            raise ValueError("temperature estimation requires a VLM backend")
        query = TemperatureQuery(
            image_ref=image_ref, prompt=build_prompt(), timeout_ms=self.config.vlm_timeout_ms
        )
        result = estimate_temperature(self.vlm, query)
        mode = self.thermal.apply_estimate(
            result.celsius, (self.config.thermal_cold_below_c, self.config.thermal_hot_above_c)
        )
        return {
            "celsius": result.celsius,
            "raw_text": result.raw_text,
            "parse_rule": result.parse_rule,
            "thermal_mode": mode,
        }

    def health(self) -> dict:
        return {
            "status": "ok",
            "database_records": len(self.db) if self.db is not None else 0,
            "sessions": len(self.sessions),
            "encoder": type(self.encoder).__name__ if self.encoder else None,
            "vlm": type(self.vlm).__name__ if self.vlm else None,
        }


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

_ERROR_STATUS = {
    UnknownSessionError: 404,
    SessionCompleteError: 409,
    ProtocolError: 409,
    SequenceError: 409,
    UnknownPatternError: 404,
    ParseError: 422,
    BackendTimeout: 504,
    BackendError: 502,
    EncoderError: 502,
    DimensionError: 400,
    DegenerateVectorError: 400,
    ValueError: 400,
    KeyError: 400,
}

_ROUTES = [
    ("POST", re.compile(r"^/api/session$"), "create_session"),
    ("GET", re.compile(r"^/api/session/(?P<sid>[^/]+)/next$"), "next"),
    ("POST", re.compile(r"^/api/session/(?P<sid>[^/]+)/response$"), "response"),
    ("GET", re.compile(r"^/api/session/(?P<sid>[^/]+)/results$"), "results"),
    ("POST", re.compile(r"^/api/haptic/play$"), "play"),
    ("GET", re.compile(r"^/api/thermal$"), "thermal_get"),
    ("POST", re.compile(r"^/api/thermal$"), "thermal_set"),
    ("POST", re.compile(r"^/api/recognize$"), "recognize"),
    ("POST", re.compile(r"^/api/temperature/estimate$"), "estimate"),
    ("GET", re.compile(r"^/api/health$"), "health"),
]


def _make_handler(service: HapticService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # tests and studies do not want stdio noise
            pass

        def _send(self, status: int, body: dict) -> None:
            raw = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(raw)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(raw)

        def _payload(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            if length == 0:
                return {}
            try:
                return json.loads(self.rfile.read(length))
            except json.JSONDecodeError as exc:
                raise ValueError(f"request body is not valid JSON: {exc}") from exc

        def _dispatch(self, method: str) -> None:
            for verb, pattern, name in _ROUTES:
                if verb != method:
                    continue
                match = pattern.match(self.path)
                if match is None:
                    continue
                try:
                    body = self._invoke(name, match.groupdict())
                except Exception as exc:  # mapped to HTTP statuses below
                    status = next(
                        (code for etype, code in _ERROR_STATUS.items() if isinstance(exc, etype)), 500
                    )
                    self._send(status, {"error": type(exc).__name__, "message": str(exc)})
                    return
                self._send(200, body)
                return
            self._send(404, {"error": "NotFound", "message": self.path})

        def _invoke(self, name: str, params: dict) -> dict:
            payload = self._payload() if self.command == "POST" else {}
            if name == "create_session":
                return service.create_session(payload["participant_id"], int(payload.get("seed", 0)))
            if name == "next":
                return service.next_trial(params["sid"])
            if name == "response":
                return service.record_response(
                    params["sid"], int(payload["trial_index"]), payload["perceived"]
                )
            if name == "results":
                return service.results(params["sid"])
            if name == "play":
                return service.play(
                    payload["pattern"], bool(payload.get("loop", True)), float(payload.get("gain", 1.0))
                )
            if name == "thermal_get":
                return service.thermal_state()
            if name == "thermal_set":
                return service.set_thermal_mode(payload["mode"])
            if name == "recognize":
                return service.recognize(payload["image_ref"])
            if name == "estimate":
                return service.estimate(payload["image_ref"])
            if name == "health":
                return service.health()
            raise ValueError(f"unrouted endpoint {name}")

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

    return Handler


class ServiceServer:
    """Owns the HTTP server plus the HapticService underneath it."""

    def __init__(self, config: AppConfig):
        self.service = HapticService(config)
        self._httpd = ThreadingHTTPServer(
            (config.server_host, config.server_port), _make_handler(self.service)
        )
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "ServiceServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, name="http", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
        self.service.close()


def serve(config: AppConfig) -> ServiceServer:
    """Start the service in a background thread and return its handle."""
    return ServiceServer(config).start()
