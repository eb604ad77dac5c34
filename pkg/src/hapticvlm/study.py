"""Study protocol objects: pattern conditions, randomized trial plans,
append-only session logs, and confusion-matrix statistics.

A session presents 10 conditions (5 vibrations x hot/cold) 5 times each in
seeded random order, 50 trials per participant. Logs are strictly
sequenced and durable so a live session survives crashes without losing
or reordering responses.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .stats import DesignError

VIBRATIONS = ("WC", "GT", "WS", "FR", "MW")
THERMAL_LEVELS = ("h", "c")
TRIALS_PER_CONDITION = 5


class SequenceError(ValueError):
    """A trial record arrived out of order for its session."""


class IntegrityError(ValueError):
    """A trial record contradicts the session plan or an existing record."""


class IncompleteDataError(ValueError):
    """A confusion matrix was requested with unpresented condition rows."""


@dataclass(frozen=True, order=True)
class PatternCondition:
    """One of the 10 presented conditions: a vibration pattern plus a
    thermal level, labeled like "WC-h"."""

    vibration: str
    thermal: str

    def __post_init__(self) -> None:
        if self.vibration not in VIBRATIONS:
            raise ValueError(f"unknown vibration pattern {self.vibration!r}")
        if self.thermal not in THERMAL_LEVELS:
            raise ValueError(f"unknown thermal level {self.thermal!r}")

    @property
    def label(self) -> str:
        return f"{self.vibration}-{self.thermal}"

    @classmethod
    def parse(cls, label: str) -> "PatternCondition":
        vibration, sep, thermal = label.partition("-")
        if not sep:
            raise ValueError(f"condition label must look like 'WC-h', got {label!r}")
        return cls(vibration, thermal)


# hot block first, then cold, matching the canonical reporting order
CONDITIONS: tuple[PatternCondition, ...] = tuple(
    PatternCondition(v, t) for t in THERMAL_LEVELS for v in VIBRATIONS
)
CONDITION_LABELS: tuple[str, ...] = tuple(c.label for c in CONDITIONS)
TRIALS_PER_SESSION = len(CONDITIONS) * TRIALS_PER_CONDITION


@dataclass(frozen=True)
class TrialPlan:
    """Seed-deterministic presentation order for one participant."""

    participant_id: str
    seed: int
    trials: tuple[PatternCondition, ...]


def generate_plan(participant_id: str, seed: int) -> TrialPlan:
    """Balanced 50-trial plan: every condition exactly 5 times, order given
    by a Fisher-Yates shuffle driven by the named seed."""
    trials = [cond for cond in CONDITIONS for _ in range(TRIALS_PER_CONDITION)]
    rng = np.random.Generator(np.random.PCG64(seed))
    for i in range(len(trials) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        trials[i], trials[j] = trials[j], trials[i]
    return TrialPlan(participant_id=participant_id, seed=seed, trials=tuple(trials))


@dataclass(frozen=True)
class TrialRecord:
    """One presented trial and the participant's perceived condition."""

    participant_id: str
    trial_index: int
    presented: PatternCondition
    perceived: PatternCondition
    timestamp_ms: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["presented"] = self.presented.label
        d["perceived"] = self.perceived.label
        return d

    @classmethod
    def from_json(cls, d: dict) -> "TrialRecord":
        return cls(
            participant_id=d["participant_id"],
            trial_index=int(d["trial_index"]),
            presented=PatternCondition.parse(d["presented"]),
            perceived=PatternCondition.parse(d["perceived"]),
            timestamp_ms=int(d["timestamp_ms"]),
        )


class SessionLog:
    """Append-only JSONL trial log with strict sequencing.

    The first line is a session header carrying the participant id and plan
    seed; every later line is one trial record. Appends are flushed and
    fsynced so a killed process never loses an acknowledged response.
    """

    def __init__(self, path: str | Path, session_id: str, participant_id: str, seed: int,
                 records: list[TrialRecord], _create: bool):
        self.path = Path(path)
        self.session_id = session_id
        self.participant_id = participant_id
        self.seed = seed
        self._records = records
        self._plan = generate_plan(participant_id, seed)
        if _create:
            header = {
                "type": "session",
                "session_id": session_id,
                "participant_id": participant_id,
                "seed": seed,
            }
            self._write_line(header, mode="x")

    # -- construction ------------------------------------------------------

    @classmethod
    def create(cls, path: str | Path, session_id: str, participant_id: str, seed: int) -> "SessionLog":
        return cls(path, session_id, participant_id, seed, records=[], _create=True)

    @classmethod
    def open(cls, path: str | Path) -> "SessionLog":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise IntegrityError(f"empty session log {path}")
        header = json.loads(lines[0])
        if header.get("type") != "session":
            raise IntegrityError(f"missing session header in {path}")
        records = []
        for raw in lines[1:]:
            if not raw.strip():
                continue
            entry = json.loads(raw)
            if entry.get("type") != "trial":
                raise IntegrityError(f"unexpected entry type {entry.get('type')!r} in {path}")
            records.append(TrialRecord.from_json(entry))
        log = cls(
            path,
            header["session_id"],
            header["participant_id"],
            int(header["seed"]),
            records=[],
            _create=False,
        )
        for rec in records:  # replay through the same integrity checks
            log._check(rec)
            log._records.append(rec)
        return log

    # -- appending ---------------------------------------------------------

    def _write_line(self, payload: dict, mode: str = "a") -> None:
        with open(self.path, mode, encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _check(self, record: TrialRecord) -> None:
        idx = record.trial_index
        if record.participant_id != self.participant_id:
            raise IntegrityError(
                f"record participant {record.participant_id!r} != session participant {self.participant_id!r}"
            )
        if idx != len(self._records):
            raise SequenceError(f"expected trial_index {len(self._records)}, got {idx}")
        if idx >= len(self._plan.trials):
            raise SequenceError(f"trial_index {idx} beyond the 50-trial plan")
        if record.presented != self._plan.trials[idx]:
            raise IntegrityError(
                f"trial {idx}: presented {record.presented.label} does not match "
                f"plan entry {self._plan.trials[idx].label}"
            )

    def append(self, record: TrialRecord) -> None:
        """Durably append the next trial record.

        Exact duplicates of the most recent record are acknowledged without
        writing a second row, so clients may safely retry after a crash.
        """
        if self._records and record == self._records[-1]:
            return
        self._check(record)
        entry = {"type": "trial", "session_id": self.session_id, **record.to_json()}
        self._write_line(entry)
        self._records.append(record)

    # -- views -------------------------------------------------------------

    @property
    def records(self) -> tuple[TrialRecord, ...]:
        return tuple(self._records)

    @property
    def plan(self) -> TrialPlan:
        return self._plan

    @property
    def cursor(self) -> int:
        return len(self._records)

    @property
    def complete(self) -> bool:
        return len(self._records) == len(self._plan.trials)


def load_records(paths: Iterable[str | Path]) -> list[TrialRecord]:
    """All trial records from one or more session logs, in file order."""
    records: list[TrialRecord] = []
    for path in paths:
        records.extend(SessionLog.open(path).records)
    return records


# ---------------------------------------------------------------------------
# Confusion statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row-stochastic presented-vs-perceived proportions over the 10
    conditions, plus the raw counts they came from."""

    labels: tuple[str, ...]
    counts: np.ndarray  # (10, 10) int
    proportions: np.ndarray  # (10, 10) float, rows sum to 1

    def __post_init__(self) -> None:
        self.counts.setflags(write=False)
        self.proportions.setflags(write=False)


@dataclass(frozen=True)
class ConfusionSummary:
    mean_diagonal: float
    best_label: str
    best_value: float
    worst_label: str
    worst_value: float


def confusion_counts(records: Sequence[TrialRecord]) -> np.ndarray:
    """Raw (presented, perceived) counts in canonical condition order."""
    index = {cond: i for i, cond in enumerate(CONDITIONS)}
    counts = np.zeros((len(CONDITIONS), len(CONDITIONS)), dtype=np.int64)
    for rec in records:
        counts[index[rec.presented], index[rec.perceived]] += 1
    return counts


def confusion_matrix(records: Sequence[TrialRecord]) -> ConfusionMatrix:
    """Row-normalized confusion matrix; every condition must have been
    presented at least once, otherwise its row proportion is undefined."""
    counts = confusion_counts(records)
    row_totals = counts.sum(axis=1)
    empty = [CONDITION_LABELS[i] for i in np.flatnonzero(row_totals == 0)]
    if empty:
        raise IncompleteDataError(f"no presentations for conditions: {', '.join(empty)}")
    proportions = counts / row_totals[:, None]
    return ConfusionMatrix(labels=CONDITION_LABELS, counts=counts, proportions=proportions)


def summarize(matrix: ConfusionMatrix) -> ConfusionSummary:
    """Mean diagonal recognition rate and the best/worst recognized classes
    (ties broken by canonical condition order)."""
    diag = np.diag(matrix.proportions)
    best = int(np.argmax(diag))
    worst = int(np.argmin(diag))
    return ConfusionSummary(
        mean_diagonal=float(diag.mean()),
        best_label=matrix.labels[best],
        best_value=float(diag[best]),
        worst_label=matrix.labels[worst],
        worst_value=float(diag[worst]),
    )


# ---------------------------------------------------------------------------
# Accuracy tables for ANOVA / pairwise tests
# ---------------------------------------------------------------------------


def accuracy_by_condition(records: Sequence[TrialRecord]) -> tuple[list[str], np.ndarray]:
    """Per-subject accuracy over the 10 conditions as a (subjects, 10) table.

    Cell (s, c) is the fraction of presentations of condition c to subject s
    that were perceived correctly. Every subject must have seen every
    condition at least once.
    """
    participants = sorted({rec.participant_id for rec in records})
    if not participants:
        raise DesignError("no trial records")
    index = {cond: i for i, cond in enumerate(CONDITIONS)}
    presented = np.zeros((len(participants), len(CONDITIONS)))
    correct = np.zeros_like(presented)
    row_of = {pid: i for i, pid in enumerate(participants)}
    for rec in records:
        i, j = row_of[rec.participant_id], index[rec.presented]
        presented[i, j] += 1
        if rec.perceived == rec.presented:
            correct[i, j] += 1
    if np.any(presented == 0):
        missing = np.argwhere(presented == 0)
        pid, cond = participants[missing[0][0]], CONDITION_LABELS[missing[0][1]]
        raise DesignError(f"participant {pid} never saw condition {cond}")
    return participants, correct / presented


def accuracy_by_factors(records: Sequence[TrialRecord]) -> tuple[list[str], np.ndarray]:
    """Per-subject accuracy as a (subjects, 5 vibrations, 2 thermal) table
    for the two-way within-subjects ANOVA."""
    participants, flat = accuracy_by_condition(records)
    # canonical order is thermal-major (all-hot then all-cold)
    table = flat.reshape(len(participants), len(THERMAL_LEVELS), len(VIBRATIONS))
    return participants, table.transpose(0, 2, 1)
