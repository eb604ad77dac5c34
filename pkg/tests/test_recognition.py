import time

import numpy as np
import pytest

from hapticvlm.embeddings import DimensionError
from hapticvlm.fixtures import fixture_database
from hapticvlm.playback import PatternRegistry, UnknownPatternError
from hapticvlm.recognition import (
    AudioDispatcher,
    EncoderError,
    FixtureEncoder,
    FrameDescriptor,
    MaskSpec,
    RecognitionEvent,
    RecognitionPipeline,
    RemoteEncoder,
    classify_frame,
    default_mask,
    smooth_stream,
)


def frame(i, ref="img_wood.png"):
    return FrameDescriptor(frame_id=i, timestamp_ms=i * 33, image_ref=ref)


def event_for(material, frame_id=0):
    """Bare raw event carrying only the matched material, for smoothing tests."""
    from hapticvlm.embeddings import MatchResult

    match = None
    if material is not None:
        match = MatchResult(material=material, similarity=1.0, ranked_candidates=((material, 1.0),))
    return RecognitionEvent(frame_id=frame_id, match=match)


@pytest.fixture
def db():
    return fixture_database()


@pytest.fixture
def encoder(db):
    table = {f"img_{rec.name}.png": rec.embedding for rec in db.records}
    return FixtureEncoder(db.dimension, table)


class TestMaskSpec:
    def test_default_is_half_centered_rect(self):
        mask = default_mask()
        assert mask.kind == "centered_rect"
        assert mask.fraction == 0.5

    def test_fraction_bounds(self):
        MaskSpec(kind="centered_rect", fraction=1.0)
        with pytest.raises(ValueError):
            MaskSpec(kind="centered_rect", fraction=0.0)
        with pytest.raises(ValueError):
            MaskSpec(kind="centered_rect", fraction=1.5)

    def test_bitmap_validation(self):
        MaskSpec(kind="explicit_bitmap", bitmap=np.array([[0, 1], [1, 0]]))
        with pytest.raises(ValueError):
            MaskSpec(kind="explicit_bitmap", bitmap=np.array([[0, 2]]))
        with pytest.raises(ValueError):
            MaskSpec(kind="explicit_bitmap", bitmap=None)

    def test_json_round_trip(self):
        rect = default_mask()
        assert MaskSpec.from_json(rect.to_json()) == rect
        bitmap = MaskSpec(kind="explicit_bitmap", bitmap=np.array([[1, 0], [0, 1]]))
        back = MaskSpec.from_json(bitmap.to_json())
        np.testing.assert_array_equal(back.bitmap, bitmap.bitmap)


class TestClassifyFrame:
    def test_stored_vector_round_trip(self, db, encoder):
        event = classify_frame(encoder, db, frame(0, "img_wood.png"))
        assert event.match.material == "wood"
        assert event.match.similarity == pytest.approx(1.0, abs=1e-12)
        assert event.error is None
        assert event.latency_ms >= 0

    def test_zero_vector_is_encoder_error(self, db):
        backend = FixtureEncoder(db.dimension, {"bad.png": np.zeros(db.dimension)})
        event = classify_frame(backend, db, frame(0, "bad.png"))
        assert event.match is None
        assert event.error is not None

    def test_unknown_ref_is_encoder_error(self, db, encoder):
        event = classify_frame(encoder, db, frame(0, "mystery.png"))
        assert event.match is None
        assert "mystery.png" in event.error

    def test_noise_robustness(self, db, encoder):
        # perturbations up to 1% of the vector norm keep the argmax; verified
        # against a brute-force scan for every sampled direction
        rng = np.random.default_rng(60)
        wood = db.records[1].embedding
        for _ in range(50):
            noise = rng.normal(size=db.dimension)
            noise *= 0.01 * np.linalg.norm(wood) / np.linalg.norm(noise)
            noisy = wood + noise
            sims = [float(np.dot(noisy, r.embedding) / (np.linalg.norm(noisy) * np.linalg.norm(r.embedding))) for r in db.records]
            assert int(np.argmax(sims)) == 1  # brute force agrees it is still wood
            backend = FixtureEncoder(db.dimension, {"noisy.png": noisy})
            event = classify_frame(backend, db, frame(0, "noisy.png"))
            assert event.match.material == "wood"

    def test_latency_uses_supplied_clock(self, db, encoder):
        ticks = iter([10.0, 10.25])
        event = classify_frame(encoder, db, frame(0), clock=lambda: next(ticks))
        assert event.latency_ms == 250


class TestSmoothing:
    def test_identity_window(self):
        events = [event_for(m, i) for i, m in enumerate(["wood", "metal", None, "wood"])]
        smoothed = smooth_stream(events, window=1, min_agreement=1)
        assert [e.smoothed_material for e in smoothed] == ["wood", "metal", "metal", "wood"]

    def test_hand_traced_majority(self):
        # trailing window of 3, agreement 2: none, wood, wood, wood
        events = [event_for(m, i) for i, m in enumerate(["wood", "wood", "metal", "wood"])]
        smoothed = smooth_stream(events, window=3, min_agreement=2)
        assert [e.smoothed_material for e in smoothed] == [None, "wood", "wood", "wood"]

    def test_all_nomatch_stays_none(self):
        events = [event_for(None, i) for i in range(6)]
        smoothed = smooth_stream(events, window=3, min_agreement=2)
        assert all(e.smoothed_material is None for e in smoothed)

    def test_previous_value_carries_through_flicker(self):
        seq = ["wood", "wood", "wood", None, "metal", None, "metal", "metal"]
        events = [event_for(m, i) for i, m in enumerate(seq)]
        smoothed = smooth_stream(events, window=3, min_agreement=2)
        materials = [e.smoothed_material for e in smoothed]
        assert materials[:3] == [None, "wood", "wood"]
        assert materials[-1] == "metal"
        assert None not in materials[1:]  # once latched, never falls back to none

    def test_tie_breaks_toward_previous(self):
        seq = ["wood", "wood", "metal", "metal"]
        events = [event_for(m, i) for i, m in enumerate(seq)]
        smoothed = smooth_stream(events, window=4, min_agreement=2)
        # at the last frame wood and metal both have count 2: keep wood
        assert smoothed[-1].smoothed_material == "wood"

    def test_tie_without_previous_breaks_by_first_appearance(self):
        events = [event_for(m, i) for i, m in enumerate(["metal", "wood"])]
        smoothed = smooth_stream(events, window=2, min_agreement=1)
        assert smoothed[-1].smoothed_material == "metal"

    def test_audio_key_attached_with_db(self, db):
        events = [event_for("wood", i) for i in range(3)]
        smoothed = smooth_stream(events, window=1, min_agreement=1, db=db)
        assert all(e.audio_key == "WS" for e in smoothed)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            smooth_stream([], window=0, min_agreement=1)
        with pytest.raises(ValueError):
            smooth_stream([], window=3, min_agreement=4)


class TestAudioDispatch:
    def test_edge_triggered(self, db):
        dispatcher = AudioDispatcher(db)
        events = smooth_stream([event_for("wood", i) for i in range(3)], 1, 1, db=db)
        commands = [dispatcher.dispatch(e) for e in events]
        assert commands[0] is not None and commands[0].audio_key == "WS"
        assert commands[1] is None and commands[2] is None

    def test_each_transition_triggers(self, db):
        dispatcher = AudioDispatcher(db)
        seq = ["wood", "metal", "wood"]
        events = smooth_stream([event_for(m, i) for i, m in enumerate(seq)], 1, 1, db=db)
        commands = [dispatcher.dispatch(e) for e in events]
        assert [c.audio_key for c in commands] == ["WS", "MW", "WS"]

    def test_unknown_key_raises_with_registry(self, db):
        registry = PatternRegistry.from_lines(["GT = GT"])  # registry missing WS
        dispatcher = AudioDispatcher(db, registry=registry)
        events = smooth_stream([event_for("wood", 0)], 1, 1, db=db)
        with pytest.raises(UnknownPatternError):
            dispatcher.dispatch(events[0])

    def test_commands_bounded_by_transitions(self, db):
        rng = np.random.default_rng(61)
        materials = [("wood", "metal", "fabric", None)[int(rng.integers(0, 4))] for _ in range(200)]
        events = smooth_stream([event_for(m, i) for i, m in enumerate(materials)], 3, 2, db=db)
        dispatcher = AudioDispatcher(db)
        commands = [c for c in (dispatcher.dispatch(e) for e in events) if c is not None]
        smoothed = [e.smoothed_material for e in events]
        transitions = sum(1 for a, b in zip([None] + smoothed, smoothed) if a != b)
        assert len(commands) <= transitions


class TestRemoteEncoder:
    def test_wire_contract(self, db, stub_server):
        wood = db.records[1].embedding

        def encode(payload):
            assert set(payload) == {"image", "mask"}
            assert payload["mask"] == {"kind": "centered_rect", "fraction": 0.5}
            return 200, {"embedding": list(wood)}

        server = stub_server({"/encode": encode})
        backend = RemoteEncoder(server.url, dimension=db.dimension)
        event = classify_frame(backend, db, frame(0))
        assert event.match.material == "wood"

    def test_non_200_is_error_event(self, db, stub_server):
        server = stub_server({"/encode": lambda p: (503, {})})
        backend = RemoteEncoder(server.url, dimension=db.dimension)
        event = classify_frame(backend, db, frame(0))
        assert event.match is None and "503" in event.error

    def test_wrong_dimension_is_error_event(self, db, stub_server):
        server = stub_server({"/encode": lambda p: (200, {"embedding": [1.0, 2.0]})})
        backend = RemoteEncoder(server.url, dimension=db.dimension)
        event = classify_frame(backend, db, frame(0))
        assert event.match is None and "dimension" in event.error


class TestPipeline:
    def test_dimension_checked_at_start(self, db):
        backend = FixtureEncoder(dimension=16, table={})
        with pytest.raises(DimensionError):
            RecognitionPipeline(backend, db)

    def test_output_is_ordered_subsequence(self, db, encoder):
        pipeline = RecognitionPipeline(encoder, db)
        sub = pipeline.subscribe()
        pipeline.start()
        for i in range(20):
            pipeline.submit(frame(i))
            time.sleep(0.002)
        pipeline.stop(drain=True)
        seen = []
        while not sub.empty():
            seen.append(sub.get().frame_id)
        assert seen == sorted(seen)
        assert set(seen) <= set(range(20))
        assert len(seen) + pipeline.dropped_frames == 20

    def test_oldest_dropped_when_full(self, db, encoder):
        pipeline = RecognitionPipeline(encoder, db, capacity=8)
        sub = pipeline.subscribe()
        for i in range(20):  # worker not started: queue caps at 8
            pipeline.submit(frame(i))
        assert pipeline.dropped_frames == 12
        pipeline.start()
        pipeline.stop(drain=True)
        seen = [sub.get().frame_id for _ in range(sub.qsize())]
        assert seen == list(range(12, 20))

    def test_frame_ids_must_increase(self, db, encoder):
        pipeline = RecognitionPipeline(encoder, db)
        pipeline.submit(frame(5))
        with pytest.raises(ValueError):
            pipeline.submit(frame(5))

    def test_deterministic_event_stream_with_fixture_backend(self, db, encoder):
        def run_once():
            fake_now = iter(float(i) for i in range(10_000))
            pipeline = RecognitionPipeline(encoder, db, clock=lambda: next(fake_now))
            refs = ["img_wood.png", "img_wood.png", "img_metal.png", "img_wood.png",
                    "img_metal.png", "img_metal.png", "img_metal.png", "img_glass.png"]
            return pipeline.run_frames([frame(i, ref) for i, ref in enumerate(refs)])

        first, second = run_once(), run_once()
        assert first == second

    def test_backend_failure_does_not_kill_stream(self, db, encoder):
        pipeline = RecognitionPipeline(encoder, db)
        events = pipeline.run_frames([frame(0, "img_wood.png"), frame(1, "gone.png"), frame(2, "img_wood.png")])
        assert events[1].error is not None
        assert events[0].match is not None and events[2].match is not None

    def test_commands_flow_to_engine_hook(self, db, encoder):
        commands = []
        pipeline = RecognitionPipeline(
            encoder, db, window=1, min_agreement=1, on_command=commands.append
        )
        refs = ["img_wood.png"] * 3 + ["img_metal.png"] * 2
        pipeline.run_frames([frame(i, r) for i, r in enumerate(refs)])
        assert [c.audio_key for c in commands] == ["WS", "MW"]


class TestFixtureEncoderTable:
    def test_from_table_lines(self, db):
        encoder = FixtureEncoder.from_table_lines(db, ["shot1.png\twood", "# c", "shot2.png\tmetal"])
        np.testing.assert_array_equal(encoder.encode("shot1.png", default_mask()), db.records[1].embedding)

    def test_unknown_material_rejected(self, db):
        with pytest.raises(ValueError):
            FixtureEncoder.from_table_lines(db, ["x.png\tplastic"])

    def test_missing_tab_rejected(self, db):
        with pytest.raises(ValueError):
            FixtureEncoder.from_table_lines(db, ["x.png wood"])
