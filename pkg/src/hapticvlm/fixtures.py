"""Shipped fixture data: a reconstructed study log matching the published
confusion matrix, the 15-case temperature evaluation set, and a small
material database for hermetic recognition tests and demos.

The study log is constructed, not recorded: the published matrix reports
per-row proportions at 45 presentations per condition (9 participants x 5
repetitions), so integer counts are recovered as round(p * 45) and spread
deterministically across participants.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .embeddings import EmbeddingDatabase, build_database, save_database
from .study import (
    CONDITIONS,
    TRIALS_PER_CONDITION,
    PatternCondition,
    SessionLog,
    TrialRecord,
    generate_plan,
)

PARTICIPANT_COUNT = 9
_PRESENTATIONS_PER_ROW = PARTICIPANT_COUNT * TRIALS_PER_CONDITION  # 45

# Presented-by-perceived counts per condition row, in canonical order
# (WC-h, GT-h, WS-h, FR-h, MW-h, WC-c, GT-c, WS-c, FR-c, MW-c).
# Every row sums to 45; diagonal 381/450 = 84.67% overall.
TABLE1_COUNTS = np.array(
    [
        [45, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 42, 3, 0, 0, 0, 0, 0, 0, 0],
        [0, 2, 37, 3, 0, 0, 0, 1, 0, 2],
        [0, 0, 1, 36, 7, 0, 0, 0, 1, 0],
        [4, 0, 0, 3, 36, 0, 0, 1, 1, 0],
        [3, 0, 0, 0, 0, 42, 0, 0, 0, 0],
        [0, 2, 0, 0, 0, 1, 36, 6, 0, 0],
        [0, 0, 4, 1, 0, 0, 0, 35, 3, 2],
        [0, 0, 0, 1, 0, 0, 1, 3, 34, 6],
        [0, 0, 0, 0, 2, 0, 0, 1, 4, 38],
    ],
    dtype=np.int64,
)
TABLE1_COUNTS.setflags(write=False)

_PLAN_SEED_BASE = 1000
_SPREAD_STRIDE = 7  # coprime with 45: spreads each row's errors over participants


def participant_ids() -> list[str]:
    return [f"P{i + 1:02d}" for i in range(PARTICIPANT_COUNT)]


def _perceived_schedule(row: np.ndarray) -> list[PatternCondition]:
    """Order the 45 perceived labels of one condition row so consecutive
    (participant, repetition) slots cycle through the error mix."""
    flat: list[PatternCondition] = []
    for j, count in enumerate(row):
        flat.extend([CONDITIONS[j]] * int(count))
    return [flat[(slot * _SPREAD_STRIDE) % _PRESENTATIONS_PER_ROW] for slot in range(_PRESENTATIONS_PER_ROW)]


def study_trial_records(seed_base: int = _PLAN_SEED_BASE) -> list[TrialRecord]:
    """Full 9-participant fixture log (450 trials) whose confusion counts
    equal TABLE1_COUNTS exactly.

    Each participant follows their own seeded 50-trial plan; perceived
    responses are assigned per condition from the deterministic schedule.
    """
    schedules = {cond: _perceived_schedule(TABLE1_COUNTS[i]) for i, cond in enumerate(CONDITIONS)}
    records: list[TrialRecord] = []
    for p_index, pid in enumerate(participant_ids()):
        plan = generate_plan(pid, seed_base + p_index)
        reps = {cond: 0 for cond in CONDITIONS}
        for trial_index, presented in enumerate(plan.trials):
            slot = p_index * TRIALS_PER_CONDITION + reps[presented]
            reps[presented] += 1
            records.append(
                TrialRecord(
                    participant_id=pid,
                    trial_index=trial_index,
                    presented=presented,
                    perceived=schedules[presented][slot],
                    timestamp_ms=(p_index * 100 + trial_index) * 1000,
                )
            )
    return records


def write_study_logs(directory: str | Path, seed_base: int = _PLAN_SEED_BASE) -> list[Path]:
    """Materialize the fixture study as nine per-participant session logs."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = study_trial_records(seed_base)
    paths = []
    for p_index, pid in enumerate(participant_ids()):
        path = directory / f"{pid}.log"
        log = SessionLog.create(path, session_id=f"fixture-{pid}", participant_id=pid,
                                seed=seed_base + p_index)
        for record in (r for r in records if r.participant_id == pid):
            log.append(record)
        paths.append(path)
    return paths


# 15 (predicted, actual) temperature cases in degrees C: 13 absolute errors
# within the 8-degree tolerance (one exactly on the boundary), plus errors
# of exactly 10 and 12.
TEMPERATURE_CASES: tuple[tuple[float, float], ...] = (
    (22.0, 20.0),
    (18.5, 19.0),
    (25.0, 25.0),
    (28.0, 20.0),  # boundary: error exactly 8
    (12.0, 15.0),
    (30.0, 26.0),
    (16.0, 21.0),
    (23.0, 22.0),
    (19.0, 25.0),
    (27.0, 24.0),
    (21.0, 14.0),
    (24.5, 23.0),
    (26.0, 28.0),
    (35.0, 25.0),  # error 10
    (10.0, 22.0),  # error 12
)


def temperature_cases_csv() -> str:
    return "\n".join(f"{p},{a}" for p, a in TEMPERATURE_CASES) + "\n"


# ---------------------------------------------------------------------------
# Material database fixture
# ---------------------------------------------------------------------------

FIXTURE_MATERIALS = (("metal", "MW"), ("wood", "WS"), ("fabric", "FR"), ("glass", "GT"))


def fixture_database(dimension: int = 64, seed: int = 7) -> EmbeddingDatabase:
    """Four well-separated unit embeddings (metal, wood, fabric, glass)
    keyed to their haptic patterns."""
    rng = np.random.default_rng(seed)
    entries = []
    for name, audio_key in FIXTURE_MATERIALS:
        vec = rng.normal(size=dimension)
        entries.append((name, vec / np.linalg.norm(vec), audio_key))
    return build_database(entries)


# Accuracy table engineered so every pairwise difference has mean exactly
# zero but nonzero variance: all 45 paired t statistics are 0, so every
# Bonferroni-corrected p-value is exactly 1.000 and none is degenerate.
def pairwise_null_accuracy_table() -> np.ndarray:
    n, k = PARTICIPANT_COUNT, len(CONDITIONS)
    v = np.array([4, -3, 2, -1, 0, 1, -2, 3, -4], dtype=np.float64)  # sums to 0
    w = np.array([4, -3, 2, -1, 0, 1, -2, 3, -4], dtype=np.float64)  # sums to 0
    base = 0.8 + (np.arange(n) - 4) / 256.0
    table = np.empty((n, k))
    for s in range(n):
        for c in range(k):
            table[s, c] = base[s] + v[(s + c) % n] / 64.0 + w[s] * (c / 16.0) / 128.0
    return table


# ---------------------------------------------------------------------------
# On-disk fixture workspace (used by the CLI, service tests, and demos)
# ---------------------------------------------------------------------------


def write_fixture_workspace(root: str | Path, host: str = "127.0.0.1", port: int = 0) -> Path:
    """Materialize a self-contained runtime directory: material database,
    pattern registry, encoder/VLM fixture tables, evaluation cases, a log
    directory, and a config file wiring them together. Returns the config path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    db = fixture_database()
    save_database(db, root / "materials.hvdb")

    registry_lines = [f"{key} = {key}" for _, key in FIXTURE_MATERIALS] + ["WC = WC"]
    (root / "registry.txt").write_text("\n".join(registry_lines) + "\n", encoding="utf-8")

    encoder_lines = [f"img_{name}.png\t{name}" for name, _ in FIXTURE_MATERIALS]
    (root / "encoder_table.txt").write_text("\n".join(encoder_lines) + "\n", encoding="utf-8")

    vlm_lines = [
        "img_warm_room.png\tThe room appears to be around 28°C.",
        "img_cold_street.png\tIt looks chilly, probably between 2 and 8 degrees Celsius.",
        "img_office.png\tI'd estimate a comfortable 22°C indoors.",
        "img_fahrenheit.png\tMaybe around 68°F in here.",
    ]
    (root / "vlm_replies.txt").write_text("\n".join(vlm_lines) + "\n", encoding="utf-8")

    (root / "temperature_cases.csv").write_text(temperature_cases_csv(), encoding="utf-8")
    (root / "logs").mkdir(exist_ok=True)

    config_lines = [
        f"database.path = {root / 'materials.hvdb'}",
        f"registry.path = {root / 'registry.txt'}",
        "encoder.backend = fixture",
        f"encoder.fixture_file = {root / 'encoder_table.txt'}",
        "vlm.backend = fixture",
        f"vlm.fixture_file = {root / 'vlm_replies.txt'}",
        f"log.dir = {root / 'logs'}",
        f"server.host = {host}",
        f"server.port = {port}",
    ]
    config_path = root / "config.txt"
    config_path.write_text("\n".join(config_lines) + "\n", encoding="utf-8")
    return config_path
