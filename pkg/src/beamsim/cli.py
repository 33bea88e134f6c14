"""Batch front-end: run experiments, sweeps, and diagnostic reports.

Subcommands:
  run      execute an experiment and write the aggregate coverage table
  sweep    run one experiment per value of a swept parameter
  metrics  simulate a mobility trace and report the stability measures
  gain     export an antenna pattern table (phi, gain, reach)
  entropy  evaluate the word-parsing entropy and its closed forms

Configuration is flat key = value text (INI sections are allowed and
ignored for lookup); every key has a default matching the baseline setup,
so an empty config reproduces it. Any key can be overridden on the
command line with --set key=value. Exit codes: 0 success, 2 config error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from datetime import datetime, timezone

import numpy as np

from . import antenna, engine, mobility, stability
from .dissemination import SCENARIO_KINDS, ScenarioConfig
from .engine import ExperimentConfig
from .predictor import QuadratureConfig


class ConfigError(Exception):
    pass


_INT_KEYS = {"n_nodes", "m_max", "steps", "n_topologies", "seed",
             "n_sources", "packet_gen_horizon", "source_join_horizon",
             "quad_max_subdivisions", "prob_table_size"}
_FLOAT_KEYS = {"area_width", "area_height", "rho", "r", "alpha", "beta",
               "x_max", "s_min", "s_max", "frequency", "element_spacing",
               "path_loss_exponent", "degree_threshold", "gen_prob",
               "quad_rel_tol", "quad_abs_tol"}
_STR_KEYS = {"scenario", "policy", "antenna_kind"}
_OPTIONAL = {"n_nodes", "x_max", "element_spacing", "degree_threshold",
             "packet_gen_horizon"}

_ALIASES = {"t": "steps", "m": "m_max", "smin": "s_min", "smax": "s_max"}


def _canonical(key: str) -> str:
    k = key.strip().lower().replace("-", "_")
    k = _ALIASES.get(k, k)
    if k not in _INT_KEYS | _FLOAT_KEYS | _STR_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    return k


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _OPTIONAL and raw.lower() in ("", "auto", "none"):
        return None
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for key {key!r}: {raw!r}") from exc
    return raw


def load_settings(config_path=None, overrides=()) -> dict:
    """Merge file settings and command-line overrides into a flat dict."""
    settings: dict = {}
    if config_path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(config_path) as fh:
                parser.read_string("[_top]\n" + fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {config_path}: {exc}") from exc
        for section in parser.sections():
            for key, raw in parser.items(section):
                canon = _canonical(key)
                settings[canon] = _parse_value(canon, raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        canon = _canonical(key)
        settings[canon] = _parse_value(canon, raw)
    return settings


def build_config(settings: dict) -> ExperimentConfig:
    s = dict(settings)
    scen = ScenarioConfig.make(
        str(s.pop("scenario", "ss-sp")),
        n_sources=s.pop("n_sources", None),
        packet_gen_horizon=s.pop("packet_gen_horizon", None),
        source_join_horizon=s.pop("source_join_horizon", 20),
        gen_prob=s.pop("gen_prob", 0.5),
    )
    quad = QuadratureConfig(
        rel_tol=s.pop("quad_rel_tol", 1e-6),
        abs_tol=s.pop("quad_abs_tol", 1e-9),
        max_subdivisions=s.pop("quad_max_subdivisions", 200),
    )
    try:
        return ExperimentConfig(scenario=scen, quadrature=quad, **s)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_out(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
        return
    try:
        with open(out_path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc}", file=sys.stderr)
        sys.exit(3)


def _timestamp(args) -> str | None:
    if args.no_timestamp:
        return None
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _cmd_run(args):
    cfg = _config_from_args(args)
    agg = engine.run_experiment(cfg, workers=args.workers)
    _write_out(engine.format_aggregate(agg, cfg, _timestamp(args)), args.out)


def _cmd_sweep(args):
    cfg = _config_from_args(args)
    if "=" not in args.spec:
        raise ConfigError(f"sweep spec {args.spec!r} is not name=v1,v2,...")
    name, raw_values = args.spec.split("=", 1)
    values = [v.strip() for v in raw_values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    blocks = []
    for value in values:
        try:
            swept = engine.apply_parameter(cfg, name, value)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        agg = engine.run_experiment(swept, workers=args.workers)
        blocks.append(f"# sweep {name.strip()} = {value}\n"
                      + engine.format_aggregate(agg, swept, _timestamp(args)))
    _write_out("\n".join(blocks), args.out)


def _cmd_metrics(args):
    cfg = _config_from_args(args)
    rng = np.random.default_rng(cfg.seed)
    mob = cfg.mobility_config()
    pos = mobility.scatter(rng, cfg.node_count, mob)
    snaps = [stability.Snapshot(
        engine.unit_disk_adjacency(pos, cfg.r), pos, 0)]
    for t in range(1, cfg.steps + 1):
        pos = mobility.step(pos, rng, mob)
        snaps.append(stability.Snapshot(
            engine.unit_disk_adjacency(pos, cfg.r), pos, t))
    report = stability.compute_metric_report(snaps)
    header = ["# beamsim stability metrics"]
    ts = _timestamp(args)
    if ts is not None:
        header.append(f"# generated: {ts}")
    header.append(f"# seed: {cfg.seed}")
    _write_out("\n".join(header) + "\n" + report.to_delimited(), args.out)


def _cmd_gain(args):
    cfg = _config_from_args(args)
    kind = args.kind or cfg.antenna_kind
    rows = antenna.pattern_rows(args.m, kind, cfg.r, cfg.antenna_config(),
                                n_points=args.points, boresight=args.boresight)
    lines = [f"# beamsim gain pattern (kind={kind}, m={args.m}, r={cfg.r})"]
    ts = _timestamp(args)
    if ts is not None:
        lines.append(f"# generated: {ts}")
    lines.append("phi,gain,reach")
    for phi, g, rch in rows:
        lines.append(f"{phi:.6f},{g:.6f},{rch:.6f}")
    _write_out("\n".join(lines) + "\n", args.out)


def _cmd_entropy(args):
    if args.bits is not None:
        seq = args.bits
        label = "supplied"
    elif args.worst_case:
        if args.ell is None:
            raise ConfigError("--worst-case requires --ell")
        seq = stability.worst_case_sequence(args.ell)
        if args.z:
            raise ConfigError("worst-case generation supports Z = 0 only")
        label = f"worst-case ell={args.ell}"
    elif args.best_case:
        if args.ell is None:
            raise ConfigError("--best-case requires --ell")
        seq = stability.best_case_sequence(args.ell, args.z)
        label = f"best-case ell={args.ell} Z={args.z}"
    else:
        raise ConfigError("entropy needs --bits, --worst-case or --best-case")
    t = len(seq)
    n = stability.lz_word_count(seq)
    lines = [
        f"# beamsim entropy ({label})",
        f"sequence,{seq}",
        f"T,{t}",
        f"word_count,{n}",
    ]
    if t >= 3:
        lines.append(f"entropy,{stability.link_entropy(seq):.6f}")
        lines.append(
            f"closed_form_ell_worst,{stability.closed_form_ell(t, 'worst'):.6f}")
        lines.append(
            f"closed_form_ell_best,{stability.closed_form_ell(t, 'best'):.6f}")
        lines.append(
            f"closed_form_word_count_worst,"
            f"{stability.closed_form_word_count(t):.6f}")
    else:
        lines.append("entropy,undefined (T < 3)")
    _write_out("\n".join(lines) + "\n", args.out)


def _config_from_args(args) -> ExperimentConfig:
    settings = load_settings(args.config, args.set or [])
    if getattr(args, "seed", None) is not None:
        settings["seed"] = args.seed
    return build_config(settings)


def _add_common(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel run workers")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp header line")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsim",
        description="Mobile-network information dissemination simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter")
    p_sweep.add_argument("spec", help="name=v1,v2,... (e.g. r=20,30,40)")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_metrics = sub.add_parser(
        "metrics", help="stability measures on a simulated mobility trace")
    _add_common(p_metrics)
    p_metrics.set_defaults(func=_cmd_metrics)

    p_gain = sub.add_parser("gain", help="antenna pattern table")
    _add_common(p_gain)
    p_gain.add_argument("--m", type=int, default=6, help="antenna elements")
    p_gain.add_argument("--kind", choices=("ula", "sector"),
                        help="antenna kind (default: config antenna_kind)")
    p_gain.add_argument("--points", type=int, default=720)
    p_gain.add_argument("--boresight", type=float, default=None,
                        help="steering angle for the physical ULA pattern")
    p_gain.set_defaults(func=_cmd_gain)

    p_ent = sub.add_parser("entropy", help="link-history entropy analysis")
    p_ent.add_argument("--bits", help="binary history, e.g. 0100011011")
    p_ent.add_argument("--worst-case", action="store_true")
    p_ent.add_argument("--best-case", action="store_true")
    p_ent.add_argument("--ell", type=int, help="max word length")
    p_ent.add_argument("--z", type=int, default=0, help="remainder term Z")
    p_ent.add_argument("--out", help="output file (default stdout)")
    p_ent.set_defaults(func=_cmd_entropy)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
