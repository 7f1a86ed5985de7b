"""Command line interface.

Subcommands: simulate (run synthetic sessions to dataset.csv +
config.json), analyze (stats report + SVG plots from a dataset),
replay (regenerate one trial's frame stream), serve (line-JSON /
WebSocket guidance server), validate-config.

Exit codes: 0 success, 1 failure (reported as ``error: <code>: <detail>``
on stderr), 2 usage errors from argument parsing. The master seed
resolves as --seed, then the DRILLGUIDE_SEED environment variable, then
the config file, then the built-in default.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    ExperimentConfig,
    ReplayMismatchError,
    config_to_json_text,
    parse_config_json,
    parse_demographics_csv,
    parse_tlx_csv,
    replay_trial,
    run_experiment,
)
from .plots import box_plot_svg, radar_svg
from .records import Dataset, IngestError, read_dataset_csv, write_dataset_csv
from .stats import DegenerateDataError, StatsReport, analyze, report_to_text, subject_means
from .widget import canonical_json, frame_to_obj

EXIT_OK = 0
EXIT_ERROR = 1

METRIC_PLOTS = (("PM", "positional error (mm)"), ("RM", "rotational error (deg)"),
                ("TT", "task time (s)"))


class CliError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


def _read_text(path: str, label: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("io-error", f"cannot read {label} {path}: {exc.strerror or exc}")


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError("io-error", f"cannot write {path}: {exc.strerror or exc}")


def _load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return parse_config_json(_read_text(path, "config"))


def _resolve_seed(cli_seed: int | None, config: ExperimentConfig) -> int:
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get("DRILLGUIDE_SEED")
    if env is not None and env != "":
        try:
            return int(env)
        except ValueError:
            raise CliError("config-invalid",
                           f"DRILLGUIDE_SEED must be an integer, got {env!r}")
    return config.seed


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    overrides: dict = {"seed": _resolve_seed(args.seed, config)}
    if args.subjects is not None:
        overrides["n_subjects"] = args.subjects
    if args.trials is not None:
        overrides["trials_per_condition"] = args.trials
    config = dataclasses.replace(config, **overrides)
    config.validate()
    dataset = run_experiment(config, workers=args.workers)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_dataset_csv(dataset.records, out / "dataset.csv")
    except OSError as exc:
        raise CliError("io-error", f"cannot write to {out}: {exc.strerror or exc}")
    _write_text(out / "config.json", config_to_json_text(config))
    timeouts = sum(1 for r in dataset.records if r.timed_out)
    print(f"wrote {len(dataset.records)} records "
          f"({config.n_subjects} subjects x {len(config.conditions)} conditions x "
          f"{config.trials_per_condition} trials, {timeouts} timeouts) to {out}")
    return EXIT_OK


def _analysis_inputs(args: argparse.Namespace) -> tuple[Dataset, list | None, list | None]:
    try:
        records = read_dataset_csv(args.data)
    except OSError as exc:
        raise CliError("io-error", f"cannot read dataset {args.data}: "
                                   f"{exc.strerror or exc}")
    config = _load_config(args.config) if args.config else None
    dataset = Dataset(records, config)
    if config is not None:
        dataset.check_cardinality()
    tlx = parse_tlx_csv(_read_text(args.tlx, "TLX file")) if args.tlx else None
    demo = (parse_demographics_csv(_read_text(args.demographics, "demographics file"))
            if args.demographics else None)
    return dataset, tlx, demo


def _report_json_text(report: StatsReport) -> str:
    return json.dumps(report.to_obj(), indent=2, sort_keys=True) + "\n"


def cmd_analyze(args: argparse.Namespace) -> int:
    dataset, tlx, demo = _analysis_inputs(args)
    perm_seed = dataset.config.seed if dataset.config is not None else 0
    report = analyze(dataset, tlx_rows=tlx, demographics_rows=demo, alpha=args.alpha,
                     p_method=args.p_method, n_permutations=args.permutations,
                     perm_seed=perm_seed)
    out = Path(args.out)
    _write_text(out / "report.json", _report_json_text(report))
    _write_text(out / "report.txt", report_to_text(report))
    for metric, label in METRIC_PLOTS:
        means = subject_means(dataset, metric)
        groups = {c: means.column(c) for c in means.conditions}
        _write_text(out / f"box_{metric.lower()}.svg",
                    box_plot_svg(f"{metric} by condition", label, groups))
    axes = list(report.metrics)
    if report.tlx:
        axes += [f"TLX_{s}" for s in report.tlx]
    _write_text(out / "radar.svg",
                radar_svg("significant pairwise wins", axes, report.radar,
                          max_value=float(len(report.conditions) - 1)))
    sig = sum(1 for a in report.metrics.values()
              if a.friedman.p_value is not None and a.friedman.p_value <= args.alpha)
    print(f"analyzed {len(dataset.records)} records, {report.n_subjects} subjects; "
          f"{sig}/{len(report.metrics)} metrics significant at alpha={args.alpha}; "
          f"report in {out}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    if args.every < 1:
        raise CliError("invalid-input", "--every must be >= 1")
    config = _load_config(args.config)
    try:
        records = read_dataset_csv(args.data)
    except OSError as exc:
        raise CliError("io-error", f"cannot read dataset {args.data}: "
                                   f"{exc.strerror or exc}")
    matches = [r for r in records
               if r.subject_id == args.subject and r.trial_index == args.trial]
    if not matches:
        raise CliError("data-invalid",
                       f"no record for subject {args.subject} trial {args.trial}")
    record = matches[0]
    lines = []
    last_line = None
    emitted_last_index = -1
    for idx, elapsed, frame in replay_trial(config, record):
        line = canonical_json({"frame": idx, "elapsed": elapsed,
                               "render": frame_to_obj(frame)})
        last_line = (idx, line)
        if idx % args.every == 0:
            lines.append(line)
            emitted_last_index = idx
    if last_line is not None and last_line[0] != emitted_last_index:
        lines.append(last_line[1])  # final pose always included
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        _write_text(Path(args.out), text)
        print(f"wrote {len(lines)} frames ({record.condition.value}, "
              f"subject {args.subject}, trial {args.trial}) to {args.out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from . import wire

    config = _load_config(args.config)
    config = dataclasses.replace(config, seed=_resolve_seed(args.seed, config))
    config.validate()
    server = wire.GuidanceServer(config, host=args.host, port=args.port)
    with server:
        print(f"listening on {server.host}:{server.port} "
              f"(line-JSON and WebSocket, protocol v{wire.PROTOCOL_VERSION})",
              flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
    return EXIT_OK


def cmd_validate_config(args: argparse.Namespace) -> int:
    config = parse_config_json(_read_text(args.config, "config"))
    print(f"ok: {args.config} ({config.n_subjects} subjects, "
          f"{len(config.conditions)} conditions, "
          f"{config.trials_per_condition} trials per condition, seed {config.seed})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="drillguide",
        description="Deterministic 5-DoF drill guidance: simulate "
                    "counterbalanced sessions, analyze datasets, replay trials, "
                    "serve the frame-stream protocol.")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run synthetic subject sessions")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--config", help="experiment config JSON")
    sim.add_argument("--seed", type=int, help="master seed (beats DRILLGUIDE_SEED)")
    sim.add_argument("--subjects", type=int, help="override subject count")
    sim.add_argument("--trials", type=int, help="override trials per condition")
    sim.add_argument("--workers", type=int, default=1,
                     help="worker processes (identical output for any value)")
    sim.set_defaults(func=cmd_simulate)

    an = sub.add_parser("analyze", help="statistics report and plots")
    an.add_argument("--data", required=True, help="dataset.csv to analyze")
    an.add_argument("--out", required=True, help="output directory")
    an.add_argument("--config", help="config.json produced with the dataset")
    an.add_argument("--tlx", help="NASA-TLX scores CSV")
    an.add_argument("--demographics", help="per-subject demographics CSV")
    an.add_argument("--alpha", type=float, default=0.05, help="significance level")
    an.add_argument("--p-method", choices=("chi2", "permutation"), default="chi2",
                    help="Friedman p-value method")
    an.add_argument("--permutations", type=int, default=100_000,
                    help="Monte Carlo resamples for --p-method permutation")
    an.set_defaults(func=cmd_analyze)

    rp = sub.add_parser("replay", help="regenerate one trial's frame stream")
    rp.add_argument("--data", required=True, help="dataset.csv holding the trial")
    rp.add_argument("--config", help="config.json produced with the dataset")
    rp.add_argument("--subject", type=int, required=True)
    rp.add_argument("--trial", type=int, required=True,
                    help="session-wide trial index, as in the dataset")
    rp.add_argument("--every", type=int, default=1,
                    help="emit every Nth frame (final frame always included)")
    rp.add_argument("--out", default="-", help="output file, - for stdout")
    rp.set_defaults(func=cmd_replay)

    sv = sub.add_parser("serve", help="run the interactive guidance server")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8765)
    sv.add_argument("--config", help="experiment config JSON")
    sv.add_argument("--seed", type=int, help="master seed (beats DRILLGUIDE_SEED)")
    sv.set_defaults(func=cmd_serve)

    vc = sub.add_parser("validate-config", help="check a config file")
    vc.add_argument("--config", required=True)
    vc.set_defaults(func=cmd_validate_config)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.code}: {exc.detail}", file=sys.stderr)
    except ConfigError as exc:
        print(f"error: config-invalid: {exc}", file=sys.stderr)
    except ReplayMismatchError as exc:
        print(f"error: replay-mismatch: {exc}", file=sys.stderr)
    except IngestError as exc:
        print(f"error: data-invalid: {exc}", file=sys.stderr)
    except DegenerateDataError as exc:
        print(f"error: data-degenerate: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error: invalid-input: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
