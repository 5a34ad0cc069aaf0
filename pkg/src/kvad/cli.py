"""Command line runner: ``kvad simulate|fit|reconstruct|fig1``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dynamics
from .estimator import RankError, singular_report
from .evaluation import write_replicates_csv, write_summary_csv
from .experiments import (ConfigError, ExperimentConfig, build_dataset, fit_all,
                          method_model, reconstruction_grid)
from .kernel import fig1_distances, write_fig1_csv

log = logging.getLogger("kvad")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


# flag name -> (config key, parser)
OVERRIDES = {
    "seed": ("seed", int), "out": ("out", str), "system": ("system", str),
    "xi": ("xi", float), "sigma": ("sigma", float), "m": ("m", _int_list),
    "methods": ("methods", _str_list), "n": ("n", int), "tau": ("tau", float),
    "step": ("step", float), "xis": ("xis", _float_list), "rank_tol": ("rank_tol", float),
    "basis_size": ("basis_size", int), "ridge": ("ridge", float), "L": ("L", int),
    "n_starts": ("n_starts", int), "replicates": ("replicates", int),
    "duration": ("duration", float), "trajectory": ("trajectory", str),
    "c_min": ("c_min", float), "c_max": ("c_max", float), "c_step": ("c_step", float),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    common.add_argument("--seed", type=str)
    common.add_argument("--out", type=str, help="output directory")
    common.add_argument("--system", type=str, help="vanderpol | lorenz | file")
    common.add_argument("--xi", type=str, help="noise amplitude")
    common.add_argument("--sigma", type=str, help="Gaussian kernel bandwidth")
    common.add_argument("--m", type=str, help="comma-separated model dimensions")
    common.add_argument("--methods", type=str, help="comma-separated subset of kvad,vamp,edmd")
    common.add_argument("--n", type=str, help="number of transition pairs")
    common.add_argument("--tau", type=str, help="lag time")
    common.add_argument("--step", type=str, help="integrator step size")
    common.add_argument("--xis", type=str, help="comma-separated noise grid (reconstruct)")
    common.add_argument("--rank-tol", dest="rank_tol", type=str)
    common.add_argument("--basis-size", dest="basis_size", type=str)
    common.add_argument("--ridge", type=str, help="kernel EDMD ridge")
    common.add_argument("--L", dest="L", type=str, help="prediction horizon in lags")
    common.add_argument("--n-starts", dest="n_starts", type=str)
    common.add_argument("--replicates", type=str, help="bootstrap replicates")
    common.add_argument("--duration", type=str, help="trajectory length (lorenz)")
    common.add_argument("--trajectory", type=str, help="trajectory CSV for --system file")
    common.add_argument("--c-min", dest="c_min", type=str)
    common.add_argument("--c-max", dest="c_max", type=str)
    common.add_argument("--c-step", dest="c_step", type=str)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kvad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write trajectory / transition-pair CSVs")
    sub.add_parser("fit", parents=[common], help="fit models and write spectra")
    sub.add_parser("reconstruct", parents=[common], help="reconstruction-error grid")
    sub.add_parser("fig1", parents=[common], help="VAMP vs kernel distances of shifted boxes")
    return parser


def resolve_config(args) -> ExperimentConfig:
    base = {}
    if args.config is not None:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for flag, (key, parse) in OVERRIDES.items():
        raw = getattr(args, flag, None)
        if raw is None:
            continue
        try:
            base[key] = parse(raw)
        except ValueError:
            raise ConfigError(f"invalid value for --{flag.replace('_', '-')}: {raw!r}") from None
    if args.command == "fig1":
        base.setdefault("sigma", 1.0)
    return ExperimentConfig.from_dict(base)


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cmd_simulate(cfg: ExperimentConfig) -> list[Path]:
    out = _outdir(cfg)
    data, traj = build_dataset(cfg)
    written = []
    if traj is not None:
        path = out / "trajectory.csv"
        dynamics.save_trajectory(path, traj, cfg.step)
        written.append(path)
    path = out / "pairs.csv"
    dynamics.save_dataset(path, data)
    written += [path, path.with_suffix(".json")]
    _write_json(out / "config.json", cfg.to_dict())
    return written


def cmd_fit(cfg: ExperimentConfig) -> list[Path]:
    out = _outdir(cfg)
    data, _ = build_dataset(cfg)
    fitted = fit_all(cfg, data)
    meta = {"N": data.n, "xi": cfg.xi, "sigma": cfg.sigma}
    written = []
    m_max = max(cfg.m)
    for method in cfg.methods:
        if method == "kvad":
            model = method_model(fitted, "kvad", m_max, cfg)
            _write_json(out / "model_kvad.json", model.to_dict())
            report = singular_report(fitted.kvad_full, **meta)
        elif method == "vamp":
            if m_max - 1 > fitted.vamp.U_x.shape[1]:
                raise RankError(m_max, fitted.vamp.U_x.shape[1] + 1)
            _write_json(out / "model_vamp.json", fitted.vamp.to_dict())
            report = fitted.vamp.report(**meta)
        else:
            _write_json(out / "model_edmd.json", fitted.edmd.to_dict())
            report = fitted.edmd.report(**meta)
        path = out / f"spectrum_{method}.csv"
        report.write_csv(path)
        written.append(path)
    _write_json(out / "config.json", cfg.to_dict())
    return written


def cmd_reconstruct(cfg: ExperimentConfig) -> list[Path]:
    out = _outdir(cfg)
    reports = reconstruction_grid(cfg)
    write_summary_csv(out / "reconstruction.csv", reports)
    write_replicates_csv(out / "reconstruction_replicates.csv", reports)
    _write_json(out / "config.json", cfg.to_dict())
    return [out / "reconstruction.csv", out / "reconstruction_replicates.csv"]


def fig1_grid(cfg: ExperimentConfig) -> np.ndarray:
    if not cfg.c_step > 0 or cfg.c_max < cfg.c_min:
        raise ConfigError("fig1 grid needs c_step > 0 and c_max >= c_min")
    count = int(round((cfg.c_max - cfg.c_min) / cfg.c_step)) + 1
    # rounding keeps grid points such as 0 and 0.2 exact
    return np.round(cfg.c_min + cfg.c_step * np.arange(count), 10)


def cmd_fig1(cfg: ExperimentConfig) -> list[Path]:
    grid = fig1_grid(cfg)
    try:
        rows = fig1_distances(grid, cfg.sigma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _outdir(cfg)
    write_fig1_csv(out / "fig1.csv", rows)
    return [out / "fig1.csv"]


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "reconstruct": cmd_reconstruct, "fig1": cmd_fig1}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        for path in COMMANDS[args.command](cfg):
            log.info("wrote %s", path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RankError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
