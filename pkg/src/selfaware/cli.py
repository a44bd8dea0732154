"""Command-line entry point.

Subcommands: gen, train-sl, run-sl, fuse, export-plots, calibrate-thresholds.
Exit codes: 0 success, 2 input/validation error, 3 numerical degeneracy.

Options may come from a flat key=value config file (--config); explicit flags
win.  A single --seed is fanned out to the scenario, SOM and filter streams
through fixed labels, so a whole pipeline is reproducible from one integer.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fusion, mjpf, scenario, som, unmotivated, vocabulary
from .core import WeightedMetric, load_series_csv, save_series_csv
from .errors import InvalidInputError, NumericalDegeneracyError, ParseError, SelfAwareError

# Stream labels for fanning one seed out to the module RNGs.
_STREAM_SCENARIO = 1
_STREAM_SOM = 2
_STREAM_MJPF = 3


def module_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(stream,)).generate_state(1)[0])


def _read_config(path):
    """Flat `key = value` file; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parser, argv, args):
    """Merge config values under the command line: re-parse with the config
    values pre-set on the namespace, so explicit flags always win."""
    overrides = _read_config(args.config)
    ns = argparse.Namespace()
    for key, raw in overrides.items():
        if not hasattr(args, key):
            raise InvalidInputError(f"unknown config key {key!r}")
        current = getattr(args, key)
        caster = type(current) if current is not None else str
        try:
            setattr(ns, key, caster(raw))
        except ValueError as exc:
            raise InvalidInputError(f"config key {key!r}: {exc}") from exc
    return parser.parse_args(argv, namespace=ns)


def _scenario_params(args) -> scenario.ScenarioParams:
    return scenario.ScenarioParams(
        width=args.width,
        height=args.height,
        speed=args.speed,
        dt=args.dt,
        laps=args.laps,
        corner_radius=args.corner_radius,
        noise_sigma=args.noise_sigma,
        seed=module_seed(args.seed, _STREAM_SCENARIO),
    )


def cmd_gen(args):
    params = _scenario_params(args)
    if args.scenario == "perimeter":
        lt = scenario.generate_perimeter(params)
    elif args.scenario == "uturn":
        lt = scenario.generate_uturn(params, args.trigger)
    else:
        lt = scenario.generate_stop(params, args.stop_at, args.stop_duration, args.ramp_seconds)
    scenario.save_labeled(args.output, lt)
    abnormal = int(lt.abnormal_mask().sum())
    print(f"wrote {args.output}: {len(lt.trajectory)} samples, {abnormal} abnormal")
    return 0


def cmd_train_sl(args):
    traj = scenario.load_trajectory(args.input)
    noise = unmotivated.NoiseConfig(
        q=np.diag([args.q_pos, args.q_pos, args.q_vel, args.q_vel]),
        r=args.r_pos * np.eye(2),
    )
    states = unmotivated.track(traj, noise)
    metric = WeightedMetric(beta=args.beta, alpha=args.alpha)
    cfg = som.SomConfig(
        rows=args.rows, cols=args.cols, epochs=args.epochs,
        seed=module_seed(args.seed, _STREAM_SOM), metric=metric,
    )
    vectors = np.array([[s.x, s.y, s.vx, s.vy] for s in states])
    model = som.train(vectors, cfg)
    vocab = vocabulary.build_vocabulary(states, model, traj.dt)
    labels = [vocabulary.assign_superstate(vocab, s) for s in states]
    vocab.transitions = vocabulary.learn_transitions([labels], len(vocab), args.smoothing)
    vocabulary.save_vocabulary_json(args.output, vocab)
    print(f"wrote {args.output}: {len(vocab)} superstates, quantization error {model.quantization_error:.6f}")
    return 0


def cmd_run_sl(args):
    traj = scenario.load_trajectory(args.input)
    vocab = vocabulary.load_vocabulary_json(args.model)
    noise = unmotivated.NoiseConfig(
        q=np.diag([args.q_pos, args.q_pos, args.q_vel, args.q_vel]),
        r=args.r_pos * np.eye(2),
    )
    cfg = mjpf.MjpfConfig(
        n_particles=args.particles,
        noise=noise,
        resample_threshold=args.resample_threshold,
        seed=module_seed(args.seed, _STREAM_MJPF),
    )
    series, log = mjpf.run(vocab, cfg, traj)
    save_series_csv(args.output, series)
    if args.log:
        mjpf.save_step_log_csv(args.log, series.ks[1:], log)
    resets = sum(1 for r in log if r.weights_reset)
    print(f"wrote {args.output}: {len(series)} samples, mean anomaly {series.scores.mean():.6f}"
          + (f", {resets} weight resets" if resets else ""))
    return 0


def cmd_fuse(args):
    sl = load_series_csv(args.sl)
    pl = load_series_csv(args.pl)
    cfg = fusion.FusionConfig(
        sl_threshold=args.sl_threshold,
        pl_threshold=args.pl_threshold,
        rule=args.rule,
        max_lag=args.max_lag,
    )
    joint, lag = fusion.align(sl, pl, cfg)
    flags = fusion.joint_verdict(joint, cfg)
    fusion.save_joint_csv(args.output, joint, flags)
    labels = None
    if args.labels:
        lt = scenario.load_labeled(args.labels)
        by_k = dict(zip(lt.trajectory.ks().tolist(), lt.abnormal_mask().tolist()))
        labels = np.array([by_k.get(int(k), False) for k in joint.ks])
    summary = fusion.verdict_summary(joint, flags, lag, window=args.window, labels=labels)
    if args.summary:
        fusion.save_summary_json(args.summary, summary)
    print(f"wrote {args.output}: lag {lag}, changepoint correlation "
          f"{summary['changepoint_correlation']:.3f}, {int(np.sum(flags))} flags")
    return 0


def run_length_bands(labels):
    """Collapse a label sequence into (start, end, label) runs, ends inclusive."""
    bands = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            bands.append((start, i - 1, labels[start]))
            start = i
    return bands


def cmd_export_plots(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for series_path in args.series:
        series = load_series_csv(series_path)
        stem = Path(series_path).stem
        with open(out_dir / f"{stem}_signal.tsv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("k\tscore\n")
            for k, y in zip(series.ks, series.scores):
                fh.write(f"{k}\t{repr(float(y))}\n")
        bands = run_length_bands(series.superstates.tolist())
        with open(out_dir / f"{stem}_bands.tsv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("k_start\tk_end\tlabel\n")
            for b0, b1, lbl in bands:
                fh.write(f"{series.ks[b0]}\t{series.ks[b1]}\t{lbl}\n")
        print(f"wrote {stem}_signal.tsv and {stem}_bands.tsv ({len(bands)} bands)")
    return 0


def cmd_calibrate_thresholds(args):
    out = {}
    for series_path in args.series:
        series = load_series_csv(series_path)
        out[Path(series_path).stem] = float(np.percentile(series.scores, args.percentile))
    for name, value in out.items():
        print(f"{name}: {repr(value)}")
    if args.output:
        fusion.save_summary_json(args.output, out)
    return 0


def _add_common_scenario_flags(sub):
    sub.add_argument("--width", type=float, default=40.0)
    sub.add_argument("--height", type=float, default=20.0)
    sub.add_argument("--speed", type=float, default=2.0)
    sub.add_argument("--dt", type=float, default=0.1)
    sub.add_argument("--laps", type=int, default=4)
    sub.add_argument("--corner-radius", dest="corner_radius", type=float, default=3.0)
    sub.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.05)


def _add_noise_flags(sub, r_default):
    sub.add_argument("--q-pos", dest="q_pos", type=float, default=0.01)
    sub.add_argument("--q-vel", dest="q_vel", type=float, default=0.04)
    sub.add_argument("--r-pos", dest="r_pos", type=float, default=r_default)


def build_parser():
    parser = argparse.ArgumentParser(prog="selfaware", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="master seed fanned out per module")
    parser.add_argument("--config", help="flat key=value config file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic scenario CSV")
    gen.add_argument("scenario", choices=["perimeter", "uturn", "stop"])
    gen.add_argument("-o", "--output", required=True)
    _add_common_scenario_flags(gen)
    gen.add_argument("--trigger", type=float, default=0.5, help="u-turn trigger fraction")
    gen.add_argument("--stop-at", dest="stop_at", type=float, default=0.5, help="stop trigger fraction")
    gen.add_argument("--stop-duration", dest="stop_duration", type=float, default=5.0)
    gen.add_argument("--ramp-seconds", dest="ramp_seconds", type=float, default=1.0)
    gen.set_defaults(func=cmd_gen)

    train = sub.add_parser("train-sl", help="train the superstate vocabulary")
    train.add_argument("input")
    train.add_argument("-o", "--output", required=True)
    train.add_argument("--rows", type=int, default=4)
    train.add_argument("--cols", type=int, default=4)
    train.add_argument("--epochs", type=int, default=200)
    train.add_argument("--alpha", type=float, default=1.0)
    train.add_argument("--beta", type=float, default=0.05)
    train.add_argument("--smoothing", type=float, default=1.0)
    _add_noise_flags(train, r_default=5e-4)
    train.set_defaults(func=cmd_train_sl)

    run = sub.add_parser("run-sl", help="run the jump filter over a trajectory")
    run.add_argument("input")
    run.add_argument("--model", required=True)
    run.add_argument("-o", "--output", required=True)
    run.add_argument("--log", help="optional per-step log CSV")
    run.add_argument("--particles", type=int, default=100)
    run.add_argument("--resample-threshold", dest="resample_threshold", type=float, default=0.5)
    _add_noise_flags(run, r_default=0.01)
    run.set_defaults(func=cmd_run_sl)

    fuse = sub.add_parser("fuse", help="align and fuse two anomaly series")
    fuse.add_argument("sl")
    fuse.add_argument("pl")
    fuse.add_argument("-o", "--output", required=True)
    fuse.add_argument("--summary", help="optional JSON summary path")
    fuse.add_argument("--labels", help="labeled trajectory CSV for precision/recall")
    fuse.add_argument("--sl-threshold", dest="sl_threshold", type=float, default=0.0)
    fuse.add_argument("--pl-threshold", dest="pl_threshold", type=float, default=0.0)
    fuse.add_argument("--rule", choices=["AND", "OR"], default="OR")
    fuse.add_argument("--max-lag", dest="max_lag", type=int, default=0)
    fuse.add_argument("--window", type=int, default=5)
    fuse.set_defaults(func=cmd_fuse)

    plots = sub.add_parser("export-plots", help="emit plot-ready TSV bundles")
    plots.add_argument("series", nargs="+")
    plots.add_argument("-o", "--out-dir", dest="out_dir", required=True)
    plots.set_defaults(func=cmd_export_plots)

    cal = sub.add_parser("calibrate-thresholds", help="score percentiles on normal runs")
    cal.add_argument("series", nargs="+")
    cal.add_argument("--percentile", type=float, default=99.0)
    cal.add_argument("-o", "--output", help="optional JSON output")
    cal.set_defaults(func=cmd_calibrate_thresholds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        return args.func(args)
    except NumericalDegeneracyError as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return 3
    except (SelfAwareError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
