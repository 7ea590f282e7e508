"""Command-line entry point: ``fairsemi {generate,run,sweep,compare,decompose}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .dataset import write_dataset_csv
from .decompose import write_decomposition_csv, write_pseudo_noise_csv
from .ensemble import EnsembleModel, save_ensemble
from .errors import ConfigError, FairSemiError
from .learners import save_model
from .runner import (
    METHODS,
    SCENARIOS,
    SWEEP_AXES,
    ExperimentConfig,
    SweepRow,
    compare_methods,
    decompose_experiment,
    execute,
    load_config,
    plot_sweep,
    run_repeated,
    sweep,
    write_report_csv,
    write_sweep_csv,
)
from .synthetic import GaussianSpec, build_scenario, generate_synthetic

log = logging.getLogger("fairsemi")

SEED_ENV = "FAIRSEMI_SEED"
_U64 = 2**64


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < _U64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def resolve_seed(flag: int | None, config_seed: int) -> int:
    """``--seed`` beats ``FAIRSEMI_SEED``, which beats the config file."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV, "").strip()
    if env:
        try:
            return _seed(env)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"{SEED_ENV}: {exc}") from None
    return config_seed


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {"seed": resolve_seed(args.seed, cfg.seed)}
    if getattr(args, "repeats", None) is not None:
        overrides["repeats"] = args.repeats
    return replace(cfg, **overrides)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary(rows: list[SweepRow]) -> None:
    for row in rows:
        if row.ok:
            r = row.result
            print(f"{row.axis}={row.value}: acc {r.acc_mean:.4f} +/- {r.acc_std:.4f}, "
                  f"dis {r.dis_mean:.4f} +/- {r.dis_std:.4f}")
        else:
            print(f"{row.axis}={row.value}: FAILED ({row.error})")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    seed = resolve_seed(args.seed, 0)
    out = _out(args)
    spec = GaussianSpec(n_total=args.n_total)
    if args.scenario == "full":
        write_dataset_csv(generate_synthetic(spec, seed), out / "synthetic.csv")
        print(f"wrote {out / 'synthetic.csv'}")
        return 0
    sc = build_scenario(spec, SCENARIOS.get(args.scenario), seed)
    parts = {"train": sc.train, "unlabeled": sc.unlabeled, "fair_test": sc.fair_test,
             "disc_test": sc.disc_test}
    for name, data in parts.items():
        write_dataset_csv(data, out / f"{name}.csv")
    write_dataset_csv(sc.unlabeled.with_labels(sc.unlabeled_truth), out / "unlabeled_truth.csv")
    print(f"wrote {len(parts) + 1} files to {out}")
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    out = _out(args)
    agg = run_repeated(cfg, workers=args.workers)
    row = SweepRow("method", cfg.method, cfg, agg)
    write_report_csv([row], out / "report.csv")
    if args.save_model:
        model = execute(cfg, cfg.seed, workers=args.workers).model
        if isinstance(model, EnsembleModel):
            save_ensemble(model, out / "model")
        else:
            save_model(model, out / "model.txt")
    _summary([row])
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = _out(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    rows = sweep(cfg, args.axis, values, workers=args.workers)
    write_report_csv(rows, out / "report.csv", run_prefix=f"{args.axis}")
    write_sweep_csv(rows, out / f"sweep_{args.axis}.csv")
    plot_sweep(rows, out / f"sweep_{args.axis}.svg", axis_label=args.axis)
    _summary(rows)
    return 0 if any(r.ok for r in rows) else 1


def cmd_compare(args) -> int:
    cfg = _config(args)
    out = _out(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown method(s) {bad}; choose from {METHODS}")
    rows = compare_methods(cfg, methods, workers=args.workers)
    write_report_csv(rows, out / "report.csv", run_prefix="compare")
    _summary(rows)
    return 0 if any(r.ok for r in rows) else 1


def cmd_decompose(args) -> int:
    cfg = _config(args)
    out = _out(args)
    res = decompose_experiment(cfg, cfg.seed, trials=args.trials, n_eval=args.n_eval)
    write_decomposition_csv(res.supervised, out / "decomposition_sl.csv")
    write_decomposition_csv(res.semi_supervised, out / "decomposition_fs.csv")
    write_pseudo_noise_csv(res.pseudo_noise, out / "pseudo_noise.csv")
    t = res.theorem1
    print(f"variance gap SL {t.sl_variance_gap:.4f}, FS {t.ssl_variance_gap:.4f}, "
          f"pseudo noise {t.pseudo_noise:.4f}, margin {t.margin:+.4f} ({'holds' if t.holds else 'fails'})")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config")
    common.add_argument("--seed", type=_seed, help=f"base seed (default: ${SEED_ENV}, then the config)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--workers", type=_positive, default=1, help="parallel workers (default: 1)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    repeats = argparse.ArgumentParser(add_help=False)
    repeats.add_argument("--repeats", type=_positive, help="override [experiment] repeats")

    p = argparse.ArgumentParser(prog="fairsemi", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write synthetic datasets as CSV")
    g.add_argument("--scenario", choices=["full", "fair", *SCENARIOS], default="full",
                   help="'full' writes the raw sample; the others write train/unlabeled/test splits")
    g.add_argument("--n-total", type=_positive, default=22000)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", parents=[common, repeats], help="repeated runs of one config")
    r.add_argument("--save-model", action="store_true", help="also save the model fitted with the base seed")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", parents=[common, repeats], help="sweep one config field")
    s.add_argument("--axis", required=True, choices=sorted(set(SWEEP_AXES) - {"n_s"}))
    s.add_argument("--values", required=True, help="comma-separated axis values")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", parents=[common, repeats], help="compare methods on identical splits")
    c.add_argument("--methods", default=",".join(METHODS))
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("decompose", parents=[common], help="bias/variance/noise by protected group")
    d.add_argument("--trials", type=_positive, default=50)
    d.add_argument("--n-eval", type=_positive, default=None, help="evaluate on the first N test rows")
    d.set_defaults(func=cmd_decompose)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fairsemi: config error: {exc}", file=sys.stderr)
        return 2
    except (FairSemiError, FileNotFoundError) as exc:
        print(f"fairsemi: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
