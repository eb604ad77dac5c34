"""Command-line interface.

Verbs: db build, db query, synth render, thermal simulate, temp evaluate,
study plan, study serve, stats.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import load_config
from .embeddings import load_database, load_text_database, match_material, save_database, top_k
from .stats import AnovaTable, paired_t_tests, rm_anova, rm_anova_oneway
from .study import (
    CONDITION_LABELS,
    accuracy_by_condition,
    accuracy_by_factors,
    confusion_matrix,
    generate_plan,
    load_records,
    summarize,
)
from .synth import default_pattern, export_wav, synthesize
from .thermal import PeltierConfig, ThermalState, set_mode, step
from .vlm import evaluate_tolerance, format_evaluation, load_cases


def _cmd_db_build(args) -> int:
    db = load_text_database(args.text)
    save_database(db, args.out)
    print(f"wrote {args.out}: dimension {db.dimension}, {len(db)} records")
    return 0


def _cmd_db_query(args) -> int:
    db = load_database(args.db)
    query = np.array([float(x) for x in args.vector.split(",")])
    if args.top > 1:
        for name, sim in top_k(db, query, args.top):
            print(f"{name}\t{sim:.6f}")
        return 0
    result = match_material(db, query, threshold=args.threshold)
    if result is None:
        print("no match above threshold")
        return 1
    print(f"{result.material}\t{result.similarity:.6f}")
    return 0


def _cmd_synth_render(args) -> int:
    pattern = default_pattern(args.pattern, duration_s=args.duration)
    buffer = synthesize(pattern, args.rate)
    export_wav(buffer, args.out)
    print(f"wrote {args.out}: {len(buffer)} samples at {args.rate} Hz ({pattern.display_name})")
    return 0


def _cmd_thermal_simulate(args) -> int:
    config = PeltierConfig()
    state = set_mode(ThermalState(plate_temp_c=args.initial), args.mode)
    print("time_s,mode,plate_temp_c")
    print(f"{state.sim_time_s:.2f},{state.mode},{state.plate_temp_c:.4f}")
    while state.sim_time_s < args.seconds:
        state = step(state, config, args.dt)
        print(f"{state.sim_time_s:.2f},{state.mode},{state.plate_temp_c:.4f}")
    return 0


def _cmd_temp_evaluate(args) -> int:
    evaluation = evaluate_tolerance(load_cases(args.cases), args.tolerance)
    print(format_evaluation(evaluation))
    return 0


def _cmd_study_plan(args) -> int:
    plan = generate_plan(args.participant, args.seed)
    print(f"participant {plan.participant_id}, seed {plan.seed}")
    for index, condition in enumerate(plan.trials):
        print(f"{index},{condition.label}")
    return 0


def _cmd_study_serve(args) -> int:
    from .service import ServiceServer

    config = load_config(args.config)
    server = ServiceServer(config)
    host, port = server.address
    print(f"serving on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _print_anova(table: AnovaTable) -> None:
    print("effect,ss_effect,ss_error,df_effect,df_error,F,p,partial_eta_sq")
    for eff in table.effects:
        print(
            f"{eff.name},{eff.ss_effect:.6f},{eff.ss_error:.6f},{eff.df_effect},"
            f"{eff.df_error},{eff.f:.4f},{eff.p:.4f},{eff.partial_eta_sq:.6f}"
        )
    print(f"# ss_subject={table.ss_subject:.6f} ss_total={table.ss_total:.6f}")


def _cmd_stats(args) -> int:
    records = load_records(args.log)
    reports = [r.strip() for r in args.report.split(",") if r.strip()]
    for report in reports:
        if report == "confusion":
            matrix = confusion_matrix(records)
            summary = summarize(matrix)
            print("== confusion ==")
            print("label," + ",".join(matrix.labels))
            for label, row in zip(matrix.labels, matrix.proportions):
                print(label + "," + ",".join(f"{p:.4f}" for p in row))
            print(
                f"# mean_diagonal={summary.mean_diagonal:.4f} "
                f"best={summary.best_label}:{summary.best_value:.4f} "
                f"worst={summary.worst_label}:{summary.worst_value:.4f}"
            )
        elif report == "anova":
            print("== anova (vibration x temperature) ==")
            _, table = accuracy_by_factors(records)
            _print_anova(rm_anova(table))
            print("== anova (10 conditions, single factor) ==")
            _, flat = accuracy_by_condition(records)
            _print_anova(rm_anova_oneway(flat))
        elif report == "pairwise":
            print("== pairwise (Bonferroni-corrected paired t-tests) ==")
            _, flat = accuracy_by_condition(records)
            print("pair,t,p_raw,p_bonferroni,degenerate")
            for cmp_result in paired_t_tests(flat, list(CONDITION_LABELS)):
                a, b = cmp_result.pair
                if cmp_result.degenerate:
                    print(f"{a}|{b},,,,1")
                else:
                    print(
                        f"{a}|{b},{cmp_result.t:.4f},{cmp_result.p_raw:.4f},"
                        f"{cmp_result.p_bonferroni:.4f},0"
                    )
        else:
            print(f"unknown report {report!r}", file=sys.stderr)
            return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hapticvlm")
    sub = parser.add_subparsers(dest="command", required=True)

    db = sub.add_parser("db", help="material database operations").add_subparsers(
        dest="subcommand", required=True
    )
    build = db.add_parser("build", help="build a binary database from text records")
    build.add_argument("--text", required=True, help="input text records (name, audio_key, components)")
    build.add_argument("--out", required=True, help="output .hvdb path")
    build.set_defaults(func=_cmd_db_build)
    query = db.add_parser("query", help="match a raw vector against a database")
    query.add_argument("--db", required=True)
    query.add_argument("--vector", required=True, help="comma-separated components")
    query.add_argument("--threshold", type=float, default=0.0)
    query.add_argument("--top", type=int, default=1)
    query.set_defaults(func=_cmd_db_query)

    synth = sub.add_parser("synth", help="waveform synthesis").add_subparsers(
        dest="subcommand", required=True
    )
    render = synth.add_parser("render", help="render a pattern to WAV")
    render.add_argument("--pattern", required=True, choices=["WC", "GT", "WS", "FR", "MW"])
    render.add_argument("--out", required=True)
    render.add_argument("--rate", type=int, default=48000)
    render.add_argument("--duration", type=float, default=2.0)
    render.set_defaults(func=_cmd_synth_render)

    thermal = sub.add_parser("thermal", help="thermal simulation").add_subparsers(
        dest="subcommand", required=True
    )
    simulate = thermal.add_parser("simulate", help="print a plate-temperature trajectory")
    simulate.add_argument("--mode", choices=["hot", "cold", "idle"], default="hot")
    simulate.add_argument("--seconds", type=float, default=10.0)
    simulate.add_argument("--dt", type=float, default=0.5)
    simulate.add_argument("--initial", type=float, default=25.0)
    simulate.set_defaults(func=_cmd_thermal_simulate)

    temp = sub.add_parser("temp", help="temperature evaluation").add_subparsers(
        dest="subcommand", required=True
    )
    evaluate = temp.add_parser("evaluate", help="tolerance-score predicted,actual cases")
    evaluate.add_argument("--cases", required=True)
    evaluate.add_argument("--tolerance", type=float, default=8.0)
    evaluate.set_defaults(func=_cmd_temp_evaluate)

    study = sub.add_parser("study", help="study harness").add_subparsers(
        dest="subcommand", required=True
    )
    plan = study.add_parser("plan", help="print a seeded 50-trial plan")
    plan.add_argument("--participant", required=True)
    plan.add_argument("--seed", type=int, required=True)
    plan.set_defaults(func=_cmd_study_plan)
    serve = study.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", default=None, help="config file (or HAPTICVLM_CONFIG)")
    serve.set_defaults(func=_cmd_study_serve)

    stats = sub.add_parser("stats", help="statistics over session logs")
    stats.add_argument("--log", action="append", required=True, help="session log (repeatable)")
    stats.add_argument("--report", default="confusion", help="comma list: confusion,anova,pairwise")
    stats.set_defaults(func=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
