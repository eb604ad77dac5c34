import logging

import pytest

from hapticvlm.playback import (
    NullSink,
    PatternRegistry,
    PlaybackCommand,
    PlaybackEngine,
    UnknownPatternError,
)


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now

    def advance(self, dt):
        self.now += dt


class FailingSink:
    def start(self, audio_key, buffer, loop, gain):
        raise RuntimeError("device unavailable")

    def stop(self):
        raise RuntimeError("device unavailable")


@pytest.fixture
def engine():
    clock = FakeClock()
    eng = PlaybackEngine(sink=NullSink(), sample_rate_hz=8000, clock=clock)
    eng.fake_clock = clock
    yield eng
    eng.shutdown()


class TestPatternRegistry:
    def test_default_covers_all_patterns(self):
        registry = PatternRegistry.default()
        assert sorted(registry.keys()) == ["FR", "GT", "MW", "WC", "WS"]

    def test_from_lines_with_overrides(self):
        registry = PatternRegistry.from_lines(
            [
                "# mapping",
                "tap = GT carrier_hz=700 duration_s=1.0",
                "rub = FR",
            ]
        )
        tap = registry.get("tap")
        assert tap.id == "GT"
        assert tap.params["carrier_hz"] == 700.0
        assert tap.duration_s == 1.0
        assert registry.get("rub").id == "FR"

    def test_bad_lines(self):
        with pytest.raises(ValueError):
            PatternRegistry.from_lines(["tap GT"])
        with pytest.raises(ValueError):
            PatternRegistry.from_lines(["tap = "])
        with pytest.raises(ValueError):
            PatternRegistry.from_lines(["tap = GT carrier_hz:700"])

    def test_unknown_key(self):
        with pytest.raises(UnknownPatternError):
            PatternRegistry.default().get("granite")


class TestPlaybackCommand:
    def test_gain_bounds(self):
        PlaybackCommand("GT", gain=0.0)
        PlaybackCommand("GT", gain=1.0)
        with pytest.raises(ValueError):
            PlaybackCommand("GT", gain=1.5)


class TestPlaybackEngine:
    def test_preemption(self, engine):
        gt = engine.schedule_playback(PlaybackCommand("GT"))
        assert gt.active
        ws = engine.schedule_playback(PlaybackCommand("WS"))
        assert ws.active
        assert gt.stopped and not gt.active
        assert engine.current is ws
        assert [key for key, _, _ in engine.sink.started] == ["GT", "WS"]

    def test_loop_outlives_duration(self, engine):
        handle = engine.schedule_playback(PlaybackCommand("GT", loop=True))
        engine.fake_clock.advance(10.0)  # pattern duration is 2 s
        assert handle.active

    def test_non_loop_expires(self, engine):
        handle = engine.schedule_playback(PlaybackCommand("GT"))
        assert handle.active
        engine.fake_clock.advance(2.5)
        assert not handle.active
        assert not handle.stopped  # expired, not preempted

    def test_unknown_key_raises(self, engine):
        with pytest.raises(UnknownPatternError):
            engine.schedule_playback(PlaybackCommand("granite"))
        assert engine.current is None

    def test_failing_sink_falls_back_to_null(self, caplog):
        eng = PlaybackEngine(sink=FailingSink(), sample_rate_hz=8000)
        try:
            with caplog.at_level(logging.WARNING):
                handle = eng.schedule_playback(PlaybackCommand("GT"))
            assert handle.active
            assert isinstance(eng.sink, NullSink)
            assert any("falling back" in rec.message for rec in caplog.records)
            # engine still usable after the swap
            eng.schedule_playback(PlaybackCommand("WS"))
            assert eng.current.audio_key == "WS"
        finally:
            eng.shutdown()

    def test_stop_clears_current(self, engine):
        handle = engine.schedule_playback(PlaybackCommand("FR"))
        engine.stop()
        assert engine.current is None
        assert handle.stopped

    def test_buffer_cache_reused(self, engine):
        first = engine.buffer_for("GT")
        second = engine.buffer_for("GT")
        assert first is second

    def test_schedulable_from_other_threads(self, engine):
        import threading

        results = []

        def worker(key):
            results.append(engine.schedule_playback(PlaybackCommand(key)))

        threads = [threading.Thread(target=worker, args=(key,)) for key in ("GT", "WS", "FR")]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 3
        assert engine.current.audio_key in ("GT", "WS", "FR")
        assert sum(1 for h in results if not h.stopped) == 1
