import numpy as np
import pytest

from hapticvlm.fixtures import TEMPERATURE_CASES, temperature_cases_csv
from hapticvlm.vlm import (
    BackendError,
    BackendTimeout,
    EmptyEvaluationError,
    FixtureVlmBackend,
    ParseError,
    RemoteVlmBackend,
    TemperatureQuery,
    build_prompt,
    estimate_temperature,
    evaluate_tolerance,
    format_evaluation,
    load_cases,
    parse_temperature,
)


class TestBuildPrompt:
    def test_canonical_text(self):
        prompt = build_prompt("default")
        assert prompt == (
            "Look at this photo of the surrounding space. Estimate the ambient "
            "temperature in the room in degrees Celsius. Reply with a single "
            "number or a narrow range."
        )

    def test_pure(self):
        assert build_prompt() == build_prompt()

    def test_unknown_style(self):
        with pytest.raises(ValueError):
            build_prompt("poetic")


class TestParseTemperature:
    def test_single_celsius(self):
        est = parse_temperature("The room appears to be around 22°C.")
        assert est.celsius == 22.0
        assert est.parse_rule == "single_value"
        assert est.raw_text == "The room appears to be around 22°C."

    def test_range_midpoint(self):
        est = parse_temperature("probably between 18 and 24 degrees Celsius")
        assert est.celsius == 21.0
        assert est.parse_rule == "range_midpoint"

    def test_fahrenheit_conversion(self):
        est = parse_temperature("I'd guess 68°F indoors.")
        assert est.celsius == pytest.approx((68 - 32) * 5 / 9, abs=1e-12)
        assert est.celsius == pytest.approx(20.0, abs=1e-12)
        assert est.parse_rule == "fahrenheit_converted"

    def test_fahrenheit_exact_freezing(self):
        assert parse_temperature("32°F").celsius == 0.0

    def test_fahrenheit_clamped(self):
        # 212 F = 100 C, clamped to the plausible ceiling
        assert parse_temperature("212°F").celsius == 60.0

    def test_celsius_clamps(self):
        assert parse_temperature("reading of 100°C").celsius == 60.0
        assert parse_temperature("about -80°C").celsius == -50.0

    def test_round_trip_over_plausible_range(self):
        for t in np.linspace(-50, 60, 45):
            est = parse_temperature(f"{t:.6f}°C")
            assert est.celsius == pytest.approx(float(f"{t:.6f}"), abs=1e-9)

    def test_dash_range_variants(self):
        for text in ("2–8°C", "2-8°C", "2 to 8 °C", "between 2 and 8 °C"):
            est = parse_temperature(f"maybe {text} tonight")
            assert est.celsius == 5.0, text
            assert est.parse_rule == "range_midpoint"

    def test_negative_range(self):
        est = parse_temperature("between -5 and 3 degrees")
        assert est.celsius == -1.0

    def test_fahrenheit_range_converted(self):
        est = parse_temperature("somewhere from 60-70°F")
        assert est.celsius == pytest.approx((65 - 32) * 5 / 9, abs=1e-9)
        assert est.parse_rule == "range_midpoint"

    def test_bare_number_reply(self):
        est = parse_temperature("22")
        assert est.celsius == 22.0
        assert est.parse_rule == "single_value"
        est = parse_temperature(" 21.5 ")
        assert est.celsius == 21.5

    def test_range_without_degree_context_ignored(self):
        # "між 9 to 5" style numbers with no unit anywhere -> no extraction
        with pytest.raises(ParseError):
            parse_temperature("open 9 to 5 every day, quite cozy inside")

    def test_no_temperature(self):
        with pytest.raises(ParseError) as info:
            parse_temperature("It is a lovely room with big windows.")
        assert info.value.raw_text == "It is a lovely room with big windows."

    def test_degrees_without_fahrenheit_is_celsius(self):
        est = parse_temperature("roughly 19 degrees in here")
        assert est.celsius == 19.0
        assert est.parse_rule == "single_value"

    def test_year_number_not_picked_up(self):
        est = parse_temperature("Built in 1990, the room is at 23°C now.")
        assert est.celsius == 23.0


class TestQueryValidation:
    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            TemperatureQuery(image_ref="x.png", prompt="")

    def test_nonpositive_timeout_rejected(self):
        with pytest.raises(ValueError):
            TemperatureQuery(image_ref="x.png", prompt="p", timeout_ms=0)


class TestEstimateWithFixtureBackend:
    def test_scripted_round_trip(self):
        backend = FixtureVlmBackend({"room.png": "22°C"})
        query = TemperatureQuery(image_ref="room.png", prompt=build_prompt())
        est = estimate_temperature(backend, query)
        assert est.celsius == 22.0
        assert est.raw_text == "22°C"

    def test_non_numeric_reply_propagates_parse_error(self):
        backend = FixtureVlmBackend({"room.png": "a pleasant space"})
        with pytest.raises(ParseError):
            estimate_temperature(backend, TemperatureQuery("room.png", build_prompt()))

    def test_delay_beyond_timeout(self):
        backend = FixtureVlmBackend({"room.png": "22°C"}, delay_ms=500)
        query = TemperatureQuery("room.png", build_prompt(), timeout_ms=100)
        with pytest.raises(BackendTimeout):
            estimate_temperature(backend, query)

    def test_unknown_image_ref(self):
        backend = FixtureVlmBackend({})
        with pytest.raises(BackendError):
            estimate_temperature(backend, TemperatureQuery("nope.png", build_prompt()))

    def test_from_file(self, tmp_path):
        path = tmp_path / "replies.txt"
        path.write_text("room.png\tIt's 25°C\n# comment\nhall.png\t18°C\n")
        backend = FixtureVlmBackend.from_file(path)
        assert backend.replies == {"room.png": "It's 25°C", "hall.png": "18°C"}


class TestRemoteBackend:
    def test_wire_contract(self, stub_server):
        def infer(payload):
            assert set(payload) == {"prompt", "image"}
            return 200, {"text": "around 24°C"}

        server = stub_server({"/infer": infer})
        backend = RemoteVlmBackend(server.url)
        est = estimate_temperature(backend, TemperatureQuery("room.png", build_prompt()))
        assert est.celsius == 24.0
        assert server.requests[0][0] == "/infer"

    def test_http_error_becomes_backend_error(self, stub_server):
        server = stub_server({"/infer": lambda payload: (500, {"text": "boom"})})
        with pytest.raises(BackendError):
            RemoteVlmBackend(server.url).infer("p", "x.png", 1000)

    def test_missing_field_is_backend_error(self, stub_server):
        server = stub_server({"/infer": lambda payload: (200, {"reply": "22°C"})})
        with pytest.raises(BackendError):
            RemoteVlmBackend(server.url).infer("p", "x.png", 1000)

    def test_timeout(self, stub_server):
        server = stub_server({"/infer": lambda payload: (200, {"text": "22°C"})}, delay_s=0.8)
        with pytest.raises(BackendTimeout):
            RemoteVlmBackend(server.url).infer("p", "x.png", timeout_ms=100)

    def test_env_var_selects_endpoint(self, stub_server, monkeypatch):
        server = stub_server({"/infer": lambda payload: (200, {"text": "22°C"})})
        monkeypatch.setenv("HAPTICVLM_VLM_URL", server.url)
        backend = RemoteVlmBackend()
        assert backend.infer("p", "x.png", 1000) == "22°C"

    def test_unconfigured(self, monkeypatch):
        monkeypatch.delenv("HAPTICVLM_VLM_URL", raising=False)
        with pytest.raises(BackendError):
            RemoteVlmBackend()


class TestEvaluateTolerance:
    def test_fixture_accuracy(self):
        evaluation = evaluate_tolerance(TEMPERATURE_CASES, 8.0)
        assert evaluation.accuracy == pytest.approx(13 / 15, abs=1e-12)
        incorrect = [r.abs_error_c for r in evaluation.cases if not r.correct]
        assert sorted(incorrect) == [10.0, 12.0]

    def test_single_exact_case(self):
        evaluation = evaluate_tolerance([(20.0, 20.0)])
        assert evaluation.cases[0].abs_error_c == 0.0
        assert evaluation.accuracy == 1.0

    def test_boundary_inclusive(self):
        evaluation = evaluate_tolerance([(28.0, 20.0)], 8.0)
        assert evaluation.cases[0].correct

    def test_permutation_invariant(self):
        rng = np.random.default_rng(50)
        cases = list(TEMPERATURE_CASES)
        base = evaluate_tolerance(cases).accuracy
        for _ in range(5):
            rng.shuffle(cases)
            assert evaluate_tolerance(cases).accuracy == base

    def test_monotone_in_tolerance(self):
        accuracies = [evaluate_tolerance(TEMPERATURE_CASES, tol).accuracy for tol in (1, 4, 8, 10, 12, 20)]
        assert all(x <= y for x, y in zip(accuracies, accuracies[1:]))

    def test_empty_cases(self):
        with pytest.raises(EmptyEvaluationError):
            evaluate_tolerance([])

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            evaluate_tolerance([(20.0, 20.0)], 0.0)


class TestCaseFileFormat:
    def test_load_cases(self, tmp_path):
        path = tmp_path / "cases.csv"
        path.write_text("# predicted,actual\n22,20\n18.5,19\n")
        assert load_cases(path) == [(22.0, 20.0), (18.5, 19.0)]

    def test_round_trip_fixture_csv(self, tmp_path):
        path = tmp_path / "cases.csv"
        path.write_text(temperature_cases_csv())
        assert load_cases(path) == list(TEMPERATURE_CASES)

    def test_malformed(self):
        with pytest.raises(ValueError):
            load_cases(["22,20,1"])

    def test_report_contains_rows(self):
        evaluation = evaluate_tolerance(TEMPERATURE_CASES)
        report = format_evaluation(evaluation)
        assert "accuracy:  0.8667 (13/15)" in report
        assert report.count("\n") == 2 + len(TEMPERATURE_CASES)
