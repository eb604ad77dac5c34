"""Parametric synthesis of the five vibrotactile patterns, band-limited to
the perceivable 1-1000 Hz vibration range, with 16-bit PCM WAV export.

Patterns are rendered deterministically: noise components come from a
fixed per-pattern seed, so the same pattern, rate, and parameters always
produce bitwise-identical buffers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import signal

PATTERN_IDS = ("WC", "GT", "WS", "FR", "MW")
DISPLAY_NAMES = {
    "WC": "Wood carving",
    "GT": "Glass tapping",
    "WS": "Wood striking",
    "FR": "Fabric rubbing",
    "MW": "Metal whooshing",
}
PERCEPTIBLE_BAND = (1.0, 1000.0)
DEFAULT_SAMPLE_RATE = 48000
MIN_SAMPLE_RATE = 8000

_NOISE_SEEDS = {"WC": 101, "GT": 202, "WS": 303, "FR": 404, "MW": 505}

# Spectral content parameters must stay strictly inside the perceivable
# band; envelope rates (AM, repetition) only need to be positive.
_SPECTRAL_PARAMS = {
    "WC": ("band_low_hz", "band_high_hz"),
    "FR": ("band_low_hz", "band_high_hz"),
    "GT": ("carrier_hz",),
    "WS": ("carrier_hz",),
    "MW": ("sweep_start_hz", "sweep_end_hz", "noise_low_hz", "noise_high_hz"),
}

_DEFAULT_PARAMS: dict[str, dict[str, float]] = {
    "WC": {"band_low_hz": 50.0, "band_high_hz": 600.0, "am_rate_hz": 8.0, "am_depth": 0.8},
    "GT": {"carrier_hz": 900.0, "decay_s": 0.030, "rep_rate_hz": 2.0, "attack_s": 0.002},
    "WS": {"carrier_hz": 200.0, "decay_s": 0.050, "rep_rate_hz": 1.5, "attack_s": 0.002},
    "FR": {"band_low_hz": 100.0, "band_high_hz": 400.0, "am_rate_hz": 1.0, "am_depth": 0.5},
    "MW": {
        "sweep_start_hz": 200.0,
        "sweep_end_hz": 800.0,
        "sweep_s": 1.5,
        "noise_low_hz": 100.0,
        "noise_high_hz": 700.0,
        "noise_gain": 0.15,
    },
}


class BandViolationError(ValueError):
    """A pattern's spectral parameters fall outside the perceivable band."""


class BandSpecError(ValueError):
    """Invalid band edges for filtering."""


class IoError(OSError):
    """WAV file could not be written or read."""


class WavFormatError(ValueError):
    """A WAV file is not the mono 16-bit PCM layout this module writes."""


@dataclass(frozen=True)
class HapticPattern:
    """One of the five parametric waveform definitions.

    `params` is pattern-specific (carrier/band frequencies in Hz, decay
    and attack times in seconds, AM depth as a fraction).
    """

    id: str
    display_name: str
    duration_s: float
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.id not in PATTERN_IDS:
            raise ValueError(f"unknown pattern id {self.id!r}; expected one of {PATTERN_IDS}")
        if self.duration_s <= 0:
            raise ValueError(f"duration must be positive, got {self.duration_s}")
        merged = dict(_DEFAULT_PARAMS[self.id])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameters for {self.id}: {sorted(unknown)}")
        merged.update({k: float(v) for k, v in self.params.items()})
        low, high = PERCEPTIBLE_BAND
        for key in _SPECTRAL_PARAMS[self.id]:
            value = merged[key]
            if not (low < value < high):
                raise BandViolationError(
                    f"{self.id}.{key} = {value} Hz is outside the perceivable band ({low}, {high})"
                )
        for key, value in merged.items():
            if key.endswith(("_s", "_hz")) and value <= 0:
                raise ValueError(f"{self.id}.{key} must be positive, got {value}")
        if "band_low_hz" in merged and merged["band_low_hz"] >= merged["band_high_hz"]:
            raise BandViolationError(f"{self.id}: band_low_hz must be below band_high_hz")
        object.__setattr__(self, "params", merged)


def default_pattern(pattern_id: str, duration_s: float = 2.0, **overrides: float) -> HapticPattern:
    return HapticPattern(
        id=pattern_id,
        display_name=DISPLAY_NAMES.get(pattern_id, pattern_id),
        duration_s=duration_s,
        params=overrides,
    )


@dataclass(frozen=True)
class SampleBuffer:
    """Mono sample buffer; rendered pattern buffers are peak-normalized to
    0.9 so every sample stays within unit magnitude."""

    sample_rate_hz: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.sample_rate_hz < 1:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {arr.shape}")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("samples contain NaN or Inf")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2))) if self.samples.size else 0.0


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _noise_band(rng: np.random.Generator, n: int, rate: int, low: float, high: float) -> np.ndarray:
    """Gaussian noise synthesized in the frequency domain so its energy is
    exactly confined to [low, high] Hz; unit RMS."""
    nbins = n // 2 + 1
    freqs = np.arange(nbins) * rate / n
    spectrum = np.zeros(nbins, dtype=complex)
    mask = (freqs >= low) & (freqs <= high)
    count = int(mask.sum())
    spectrum[mask] = rng.normal(size=count) + 1j * rng.normal(size=count)
    noise = np.fft.irfft(spectrum, n)
    rms = np.sqrt(np.mean(noise**2))
    return noise / rms if rms > 0 else noise


def _burst_train(
    t: np.ndarray, rate: int, duration: float, carrier: float, decay: float, rep: float, attack: float
) -> np.ndarray:
    """Repeated decaying sine bursts with a short attack ramp (the ramp
    removes onset clicks that would splatter energy out of band)."""
    out = np.zeros(t.size)
    onset = 0.0
    while onset < duration:
        i0 = int(round(onset * rate))
        if i0 >= t.size:
            break
        seg_t = t[i0:] - onset
        envelope = np.exp(-seg_t / decay) * np.minimum(1.0, seg_t / attack)
        out[i0:] += envelope * np.sin(2 * np.pi * carrier * seg_t)
        onset += 1.0 / rep
    return out


def _render(pattern: HapticPattern, rate: int) -> np.ndarray:
    p = pattern.params
    n = round(pattern.duration_s * rate)
    t = np.arange(n) / rate
    rng = np.random.default_rng(_NOISE_SEEDS[pattern.id])

    if pattern.id in ("WC", "FR"):
        noise = _noise_band(rng, n, rate, p["band_low_hz"], p["band_high_hz"])
        depth = p["am_depth"]
        envelope = (1.0 - depth / 2.0) + (depth / 2.0) * np.sin(2 * np.pi * p["am_rate_hz"] * t)
        return noise * envelope

    if pattern.id in ("GT", "WS"):
        return _burst_train(
            t, rate, pattern.duration_s, p["carrier_hz"], p["decay_s"], p["rep_rate_hz"], p["attack_s"]
        )

    # MW: linear sweep that holds its final frequency, blended with low noise,
    # under a half-sine swell envelope
    sweep_t = np.minimum(t, p["sweep_s"])
    freq = p["sweep_start_hz"] + (p["sweep_end_hz"] - p["sweep_start_hz"]) * sweep_t / p["sweep_s"]
    phase = 2 * np.pi * np.cumsum(freq) / rate
    tone = np.sin(phase)
    noise = _noise_band(rng, n, rate, p["noise_low_hz"], p["noise_high_hz"])
    envelope = np.sin(np.pi * t / pattern.duration_s)
    return ((1.0 - p["noise_gain"]) * tone + p["noise_gain"] * noise) * envelope


def band_limit(buffer: SampleBuffer, low_hz: float, high_hz: float) -> SampleBuffer:
    """4th-order Butterworth band-pass (two cascaded second-order sections);
    output length equals input length."""
    nyquist = buffer.sample_rate_hz / 2.0
    if not (0.0 < low_hz < high_hz < nyquist):
        raise BandSpecError(
            f"band [{low_hz}, {high_hz}] must satisfy 0 < low < high < {nyquist}"
        )
    sos = signal.butter(2, [low_hz, high_hz], btype="bandpass", fs=buffer.sample_rate_hz, output="sos")
    filtered = signal.sosfilt(sos, buffer.samples) if len(buffer) else buffer.samples
    return SampleBuffer(sample_rate_hz=buffer.sample_rate_hz, samples=np.asarray(filtered))


def synthesize(pattern: HapticPattern, sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> SampleBuffer:
    """Render the pattern, confine it to the perceivable band, and
    peak-normalize to 0.9."""
    if sample_rate_hz < MIN_SAMPLE_RATE:
        raise ValueError(f"sample rate must be >= {MIN_SAMPLE_RATE} Hz, got {sample_rate_hz}")
    raw = _render(pattern, sample_rate_hz)
    limited = band_limit(SampleBuffer(sample_rate_hz, raw), *PERCEPTIBLE_BAND)
    peak = limited.peak
    samples = limited.samples * (0.9 / peak) if peak > 0 else limited.samples
    return SampleBuffer(sample_rate_hz=sample_rate_hz, samples=samples)


def band_energy_ratio(buffer: SampleBuffer, low_hz: float, high_hz: float) -> float:
    """Fraction of magnitude-squared DFT energy within [low_hz, high_hz]."""
    spectrum = np.abs(np.fft.rfft(buffer.samples)) ** 2
    total = spectrum.sum()
    if total == 0:
        return 0.0
    freqs = np.arange(spectrum.size) * buffer.sample_rate_hz / len(buffer)
    mask = (freqs >= low_hz) & (freqs <= high_hz)
    return float(spectrum[mask].sum() / total)


# ---------------------------------------------------------------------------
# WAV export (mono 16-bit PCM, little-endian RIFF)
# ---------------------------------------------------------------------------


def export_wav(buffer: SampleBuffer, path: str | Path) -> None:
    """Write samples quantized by round(s * 32767); a 44-byte canonical
    RIFF header plus 2 bytes per sample."""
    clipped = np.clip(buffer.samples, -1.0, 1.0)
    pcm = np.rint(clipped * 32767.0).astype("<i2")
    data = pcm.tobytes()
    rate = buffer.sample_rate_hz
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        rate,
        rate * 2,  # byte rate
        2,  # block align
        16,  # bits per sample
        b"data",
        len(data),
    )
    try:
        Path(path).write_bytes(header + data)
    except OSError as exc:
        raise IoError(f"cannot write WAV file {path}: {exc}") from exc


def load_wav(path: str | Path) -> SampleBuffer:
    """Read back a mono 16-bit PCM WAV written by :func:`export_wav`."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read WAV file {path}: {exc}") from exc
    if len(blob) < 44 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise WavFormatError(f"{path} is not a RIFF/WAVE file")
    fmt, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", blob, 20)
    if (fmt, channels, bits) != (1, 1, 16):
        raise WavFormatError(f"{path}: expected mono 16-bit PCM, got fmt={fmt} ch={channels} bits={bits}")
    if blob[36:40] != b"data":
        raise WavFormatError(f"{path}: missing data chunk at canonical offset")
    (data_len,) = struct.unpack_from("<I", blob, 40)
    pcm = np.frombuffer(blob, dtype="<i2", count=data_len // 2, offset=44)
    return SampleBuffer(sample_rate_hz=rate, samples=pcm.astype(np.float64) / 32767.0)
