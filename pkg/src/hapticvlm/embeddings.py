"""Material embedding database with cosine-similarity matching.

An :class:`EmbeddingDatabase` is built once from (name, embedding, audio_key)
entries and is immutable afterwards, so it can be shared freely across
threads. All matching operations are pure functions over the database.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Vector dimensions are inconsistent with each other or the database."""


class DegenerateVectorError(ValueError):
    """Vector has zero norm or non-finite components."""


class DuplicateMaterialError(ValueError):
    """Two database entries share the same material name."""


class EmptyDatabaseError(ValueError):
    """Matching was attempted against a database with no records."""


class DatabaseFormatError(ValueError):
    """A database file is malformed or has an unsupported version."""


def as_embedding(components: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate components and return them as a 1-D float64 array.

    Raises DimensionError for empty or non-1-D input and
    DegenerateVectorError when any component is NaN/Inf.
    """
    vec = np.asarray(components, dtype=np.float64)
    if vec.ndim != 1 or vec.size < 1:
        raise DimensionError(f"embedding must be a non-empty 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DegenerateVectorError("embedding contains NaN or Inf components")
    return vec


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    Computed in double precision as dot(a, b) / (|a| * |b|); the clamp
    absorbs rounding for near-parallel vectors.
    """
    va = as_embedding(a)
    vb = as_embedding(b)
    if va.size != vb.size:
        raise DimensionError(f"dimension mismatch: {va.size} vs {vb.size}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateVectorError("cosine similarity is undefined for zero-norm vectors")
    return float(np.clip(float(va @ vb) / (norm_a * norm_b), -1.0, 1.0))


@dataclass(frozen=True)
class MaterialRecord:
    """One database entry: a named material, its embedding, and the audio key
    used to retrieve the matching haptic pattern."""

    name: str
    embedding: np.ndarray
    audio_key: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("material name must be non-empty")
        vec = as_embedding(self.embedding)
        if float(np.linalg.norm(vec)) == 0.0:
            raise DegenerateVectorError(f"material {self.name!r} has a zero-norm embedding")
        vec.setflags(write=False)
        object.__setattr__(self, "embedding", vec)


@dataclass(frozen=True)
class MatchResult:
    """Best match for a query plus the full descending similarity ranking."""

    material: str
    similarity: float
    ranked_candidates: tuple[tuple[str, float], ...]


class EmbeddingDatabase:
    """Immutable collection of material records sharing one embedding dimension.

    Insertion order is preserved and used to break similarity ties.
    """

    def __init__(self, records: Sequence[MaterialRecord], dimension: int | None = None):
        records = tuple(records)
        if not records:
            if dimension is None or dimension < 1:
                raise ValueError("an empty database requires an explicit positive dimension")
            self._dimension = int(dimension)
        else:
            dims = {rec.embedding.size for rec in records}
            if len(dims) > 1:
                raise DimensionError(f"mixed embedding dimensions in database: {sorted(dims)}")
            self._dimension = dims.pop()
            if dimension is not None and dimension != self._dimension:
                raise DimensionError(
                    f"declared dimension {dimension} != record dimension {self._dimension}"
                )
        names = [rec.name for rec in records]
        if len(set(names)) != len(names):
            seen, dupes = set(), set()
            for name in names:
                (dupes if name in seen else seen).add(name)
            raise DuplicateMaterialError(f"duplicate material names: {sorted(dupes)}")
        self._records = records
        self._matrix = (
            np.stack([rec.embedding for rec in records])
            if records
            else np.empty((0, self._dimension))
        )
        self._matrix.setflags(write=False)
        self._norms = np.linalg.norm(self._matrix, axis=1)

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def records(self) -> tuple[MaterialRecord, ...]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)

    def audio_key_for(self, name: str) -> str | None:
        for rec in self._records:
            if rec.name == name:
                return rec.audio_key
        return None

    def similarities(self, query: Sequence[float] | np.ndarray) -> np.ndarray:
        """Cosine similarity of the query against every record, in insertion order."""
        vec = as_embedding(query)
        if vec.size != self._dimension:
            raise DimensionError(f"query dimension {vec.size} != database dimension {self._dimension}")
        qnorm = float(np.linalg.norm(vec))
        if qnorm == 0.0:
            raise DegenerateVectorError("query vector has zero norm")
        if not self._records:
            raise EmptyDatabaseError("database has no records to match against")
        return np.clip((self._matrix @ vec) / (self._norms * qnorm), -1.0, 1.0)


def build_database(
    entries: Iterable[tuple[str, Sequence[float] | np.ndarray, str]],
    dimension: int | None = None,
) -> EmbeddingDatabase:
    """Build an immutable database from (name, embedding, audio_key) entries.

    All embeddings must share one dimension, names must be distinct, and no
    embedding may have zero norm. `dimension` is only needed for an empty
    database (e.g. when deserializing).
    """
    records = [MaterialRecord(name, emb, audio_key) for name, emb, audio_key in entries]
    return EmbeddingDatabase(records, dimension=dimension)


def _ranking(db: EmbeddingDatabase, sims: np.ndarray) -> tuple[tuple[str, float], ...]:
    # stable sort on -sim keeps insertion order among exact ties
    order = np.argsort(-sims, kind="stable")
    return tuple((db.records[i].name, float(sims[i])) for i in order)


def match_material(
    db: EmbeddingDatabase,
    query: Sequence[float] | np.ndarray,
    threshold: float = 0.0,
) -> MatchResult | None:
    """Return the most similar record, or None if its similarity is below threshold.

    Ties are broken by insertion order. The result carries the full ranking
    of all records for diagnostics.
    """
    sims = db.similarities(query)
    best = int(np.argmax(sims))  # argmax returns the earliest index among ties
    if sims[best] < threshold:
        return None
    return MatchResult(
        material=db.records[best].name,
        similarity=float(sims[best]),
        ranked_candidates=_ranking(db, sims),
    )


def top_k(
    db: EmbeddingDatabase,
    query: Sequence[float] | np.ndarray,
    k: int,
) -> list[tuple[str, float]]:
    """The k most similar records (fewer if the database is smaller), descending."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sims = db.similarities(query)
    return list(_ranking(db, sims)[:k])


# ---------------------------------------------------------------------------
# Serialization
#
# Binary layout (little-endian):
#   magic "HVDB" | version u32 = 1 | dimension u32 | record_count u32
#   per record: name_len u16 | name utf-8 | audio_key_len u16 | key utf-8
#               | dimension * f32 components
# ---------------------------------------------------------------------------

_MAGIC = b"HVDB"
_VERSION = 1


def save_database(db: EmbeddingDatabase, path: str | Path) -> None:
    """Write the database in the bit-exact HVDB binary format (f32 components)."""
    out = bytearray()
    out += _MAGIC
    out += struct.pack("<III", _VERSION, db.dimension, len(db))
    for rec in db.records:
        name_bytes = rec.name.encode("utf-8")
        key_bytes = rec.audio_key.encode("utf-8")
        out += struct.pack("<H", len(name_bytes)) + name_bytes
        out += struct.pack("<H", len(key_bytes)) + key_bytes
        out += rec.embedding.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def load_database(path: str | Path) -> EmbeddingDatabase:
    """Read a database from the HVDB binary format."""
    blob = Path(path).read_bytes()
    if blob[:4] != _MAGIC:
        raise DatabaseFormatError(f"bad magic bytes in {path}")
    try:
        version, dimension, count = struct.unpack_from("<III", blob, 4)
    except struct.error as exc:
        raise DatabaseFormatError(f"truncated header in {path}") from exc
    if version != _VERSION:
        raise DatabaseFormatError(f"unsupported database version {version}")
    offset = 16
    entries: list[tuple[str, np.ndarray, str]] = []
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (key_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            audio_key = blob[offset : offset + key_len].decode("utf-8")
            offset += key_len
            if len(blob) - offset < 4 * dimension:
                raise DatabaseFormatError(f"truncated record {name!r} in {path}")
            vec = np.frombuffer(blob, dtype="<f4", count=dimension, offset=offset)
            offset += 4 * dimension
            entries.append((name, vec.astype(np.float64), audio_key))
    except (struct.error, UnicodeDecodeError) as exc:
        raise DatabaseFormatError(f"corrupt record data in {path}") from exc
    return build_database(entries, dimension=dimension)


def parse_text_records(lines: Iterable[str]) -> list[tuple[str, np.ndarray, str]]:
    """Parse the plain-text import format: one record per line,
    "name, audio_key, c0, c1, ..." with '#' comments and blank lines ignored."""
    entries = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) < 3:
            raise DatabaseFormatError(
                f"line {lineno}: expected 'name, audio_key, components...', got {line!r}"
            )
        name, audio_key = fields[0], fields[1]
        try:
            components = np.array([float(f) for f in fields[2:]], dtype=np.float64)
        except ValueError as exc:
            raise DatabaseFormatError(f"line {lineno}: non-numeric component") from exc
        entries.append((name, components, audio_key))
    return entries


def load_text_database(path: str | Path) -> EmbeddingDatabase:
    """Build a database from a plain-text record file (CLI import format)."""
    with open(path, "r", encoding="utf-8") as fh:
        return build_database(parse_text_records(fh))


def format_text_records(db: EmbeddingDatabase) -> str:
    """Inverse of :func:`parse_text_records`, mostly for fixtures and demos."""
    lines = []
    for rec in db.records:
        comps = ",".join(repr(float(c)) for c in rec.embedding)
        lines.append(f"{rec.name}, {rec.audio_key}, {comps}")
    return "\n".join(lines) + "\n"
