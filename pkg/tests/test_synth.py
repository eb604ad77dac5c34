import math
import struct

import numpy as np
import pytest

from hapticvlm.synth import (
    BandSpecError,
    BandViolationError,
    PATTERN_IDS,
    PERCEPTIBLE_BAND,
    SampleBuffer,
    WavFormatError,
    band_energy_ratio,
    band_limit,
    default_pattern,
    export_wav,
    load_wav,
    synthesize,
)


def analytic_bandpass_gain(f, low, high, order=2):
    """Analog-prototype Butterworth band-pass magnitude at frequency f
    (oracle independent of the digital design route)."""
    w = (f * f - low * high) / ((high - low) * f)
    return 1.0 / math.sqrt(1.0 + w ** (2 * order))


def sine_buffer(freq, rate=48000, duration=2.0, amplitude=1.0):
    t = np.arange(int(duration * rate)) / rate
    return SampleBuffer(rate, amplitude * np.sin(2 * np.pi * freq * t))


class TestPatternDefinitions:
    def test_all_defaults_valid(self):
        for pid in PATTERN_IDS:
            pattern = default_pattern(pid)
            assert pattern.duration_s == 2.0
            assert pattern.display_name

    def test_ids_cover_the_five_patterns(self):
        assert PATTERN_IDS == ("WC", "GT", "WS", "FR", "MW")

    def test_out_of_band_carrier_rejected(self):
        with pytest.raises(BandViolationError):
            default_pattern("GT", carrier_hz=1200.0)
        with pytest.raises(BandViolationError):
            default_pattern("GT", carrier_hz=1.0)  # open interval

    def test_out_of_band_noise_band_rejected(self):
        with pytest.raises(BandViolationError):
            default_pattern("WC", band_high_hz=1500.0)

    def test_inverted_band_rejected(self):
        with pytest.raises(BandViolationError):
            default_pattern("FR", band_low_hz=500.0, band_high_hz=100.0)

    def test_unknown_pattern_and_param(self):
        with pytest.raises(ValueError):
            default_pattern("XX")
        with pytest.raises(ValueError):
            default_pattern("GT", sparkle=3.0)

    def test_nonpositive_duration(self):
        with pytest.raises(ValueError):
            default_pattern("GT", duration_s=0.0)


class TestSynthesize:
    def test_length_and_normalization(self):
        buf = synthesize(default_pattern("GT"), 48000)
        assert len(buf) == 96000
        assert buf.peak == pytest.approx(0.9, abs=1e-6)

    def test_length_rounding_at_odd_rate(self):
        buf = synthesize(default_pattern("WS", duration_s=1.3), 44100)
        assert len(buf) == round(1.3 * 44100)

    def test_deterministic(self):
        for pid in PATTERN_IDS:
            a = synthesize(default_pattern(pid), 48000)
            b = synthesize(default_pattern(pid), 48000)
            np.testing.assert_array_equal(a.samples, b.samples)

    @pytest.mark.parametrize("pid", PATTERN_IDS)
    def test_in_band_energy(self, pid):
        buf = synthesize(default_pattern(pid), 48000)
        assert band_energy_ratio(buf, *PERCEPTIBLE_BAND) >= 0.99

    def test_min_sample_rate_enforced(self):
        with pytest.raises(ValueError):
            synthesize(default_pattern("GT"), 4000)

    def test_all_samples_within_unit_magnitude(self):
        for pid in PATTERN_IDS:
            buf = synthesize(default_pattern(pid), 48000)
            assert buf.peak <= 1.0


class TestBandLimit:
    def test_passband_rms(self):
        low, high = PERCEPTIBLE_BAND
        buf = sine_buffer(500.0)
        out = band_limit(buf, low, high)
        ratio = out.rms / buf.rms
        assert abs(ratio - 1.0) <= 0.05
        assert ratio == pytest.approx(analytic_bandpass_gain(500.0, low, high), abs=0.01)

    def test_stopband_rms(self):
        low, high = PERCEPTIBLE_BAND
        buf = sine_buffer(4000.0)
        out = band_limit(buf, low, high)
        ratio = out.rms / buf.rms
        assert ratio <= 0.10
        assert ratio == pytest.approx(analytic_bandpass_gain(4000.0, low, high), abs=0.01)

    def test_zero_buffer_stays_zero(self):
        buf = SampleBuffer(48000, np.zeros(1000))
        out = band_limit(buf, 1.0, 1000.0)
        np.testing.assert_array_equal(out.samples, np.zeros(1000))

    def test_length_preserved(self):
        buf = sine_buffer(100.0, duration=0.37)
        assert len(band_limit(buf, 1.0, 1000.0)) == len(buf)

    def test_linearity(self):
        rng = np.random.default_rng(40)
        x = SampleBuffer(48000, rng.normal(size=2000) * 0.1)
        y = SampleBuffer(48000, rng.normal(size=2000) * 0.1)
        a, b = 0.7, -1.3
        combined = SampleBuffer(48000, a * x.samples + b * y.samples)
        lhs = band_limit(combined, 1.0, 1000.0).samples
        rhs = a * band_limit(x, 1.0, 1000.0).samples + b * band_limit(y, 1.0, 1000.0).samples
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_invalid_bands(self):
        buf = sine_buffer(100.0, duration=0.1)
        with pytest.raises(BandSpecError):
            band_limit(buf, 1000.0, 1.0)
        with pytest.raises(BandSpecError):
            band_limit(buf, 0.0, 1000.0)
        with pytest.raises(BandSpecError):
            band_limit(buf, 1.0, 24000.0)  # nyquist


class TestBandEnergyRatio:
    def test_pure_tone_in_band(self):
        assert band_energy_ratio(sine_buffer(500.0), 1.0, 1000.0) >= 0.999

    def test_pure_tone_out_of_band(self):
        assert band_energy_ratio(sine_buffer(4000.0), 1.0, 1000.0) <= 0.001

    def test_silence(self):
        assert band_energy_ratio(SampleBuffer(48000, np.zeros(100)), 1.0, 1000.0) == 0.0


class TestWav:
    def test_file_size_arithmetic(self, tmp_path):
        buf = synthesize(default_pattern("GT"), 48000)
        path = tmp_path / "gt.wav"
        export_wav(buf, path)
        assert path.stat().st_size == 44 + 2 * 96000

    def test_header_layout(self, tmp_path):
        buf = SampleBuffer(48000, np.array([0.0, 0.5, -0.5]))
        path = tmp_path / "tiny.wav"
        export_wav(buf, path)
        blob = path.read_bytes()
        assert blob[:4] == b"RIFF"
        assert struct.unpack_from("<I", blob, 4)[0] == 36 + 6
        assert blob[8:16] == b"WAVEfmt "
        fmt, channels, rate, byte_rate, block, bits = struct.unpack_from("<HHIIHH", blob, 20)
        assert (fmt, channels, rate, byte_rate, block, bits) == (1, 1, 48000, 96000, 2, 16)
        assert blob[36:40] == b"data"
        assert struct.unpack_from("<I", blob, 40)[0] == 6
        samples = struct.unpack_from("<3h", blob, 44)
        assert samples == (0, round(0.5 * 32767), -round(0.5 * 32767))

    def test_round_trip_within_quantization(self, tmp_path):
        buf = synthesize(default_pattern("MW"), 48000)
        path = tmp_path / "mw.wav"
        export_wav(buf, path)
        back = load_wav(path)
        assert back.sample_rate_hz == 48000
        assert len(back) == len(buf)
        np.testing.assert_allclose(back.samples, buf.samples, atol=1.0 / 32767)

    def test_zero_length_buffer(self, tmp_path):
        path = tmp_path / "empty.wav"
        export_wav(SampleBuffer(48000, np.array([])), path)
        assert path.stat().st_size == 44
        back = load_wav(path)
        assert len(back) == 0

    def test_load_rejects_non_wav(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"not a wav file at all, padding padding padding!!")
        with pytest.raises(WavFormatError):
            load_wav(path)


class TestSampleBuffer:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SampleBuffer(48000, np.array([0.0, np.inf]))

    def test_rejects_2d(self):
        with pytest.raises(ValueError):
            SampleBuffer(48000, np.zeros((2, 2)))

    def test_duration(self):
        assert SampleBuffer(1000, np.zeros(1500)).duration_s == 1.5
