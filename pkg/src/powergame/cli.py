"""Command-line experiment runner.

Every flag can also be given through a JSON config file (same names with
underscores); flags override the file.  The default output directory can
be set with the POWERGAME_OUT_DIR environment variable.
"""
import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import (DEFAULT_NOISE_POWER, DEFAULT_PROCESSING_GAIN,
                          ExperimentSpec, run_convergence_trace,
                          run_load_sweep, run_q_sweep)
from .receivers import ReceiverKind

OUT_DIR_ENV = "POWERGAME_OUT_DIR"


def _parse_floats(value):
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(tok) for tok in str(value).split(",") if tok != "")


def _parse_receivers(value):
    if isinstance(value, (list, tuple)):
        names = value
    else:
        names = [tok.strip() for tok in str(value).split(",") if tok.strip()]
    return tuple(ReceiverKind(name.lower()) for name in names)


def _parse_trace(value):
    """K,receiver,q,seed (comma string or a 4-element list)."""
    parts = (value if isinstance(value, (list, tuple))
             else str(value).split(","))
    if len(parts) != 4:
        raise ValueError("trace needs exactly K,receiver,q,seed")
    k_users, kind, q, seed = parts
    return int(k_users), ReceiverKind(str(kind).strip().lower()), \
        float(q), int(seed)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="powergame",
        description="Equilibrium experiments for the power-control game.")
    parser.add_argument("--config", type=Path,
                        help="JSON file providing defaults for any flag")
    parser.add_argument("--load-grid",
                        help="comma-separated K/N loads for a load sweep")
    parser.add_argument("--q-grid",
                        help="comma-separated operating powers in Watts; "
                             "runs a q sweep (and widens the load sweep)")
    parser.add_argument("--receivers",
                        help="comma-separated subset of mf,de,mmse")
    parser.add_argument("--realizations", type=int,
                        help="scenario realizations per sweep cell")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--n", type=int,
                        help="processing gain, chips per bit")
    parser.add_argument("--out-dir", type=Path,
                        help=f"output directory (default ${OUT_DIR_ENV} "
                             "or the working directory)")
    parser.add_argument("--trace",
                        help="K,receiver,q,seed: write one convergence "
                             "trace CSV")
    parser.add_argument("--tol", type=float,
                        help="relative fixed-point tolerance")
    parser.add_argument("--max-iter", type=int,
                        help="iteration cap per dynamics run")
    parser.add_argument("--pmax", type=float,
                        help="maximum transmit power in Watts")
    return parser


_DEFAULTS = {
    "load_grid": None,
    "q_grid": None,
    "receivers": "mf,de,mmse",
    "realizations": 100,
    "seed": 0,
    "n": DEFAULT_PROCESSING_GAIN,
    "out_dir": None,
    "trace": None,
    "tol": 1e-6,
    "max_iter": 500,
    "pmax": 100.0,
}


def _merge_settings(args):
    settings = dict(_DEFAULTS)
    if args.config is not None:
        loaded = json.loads(Path(args.config).read_text())
        unknown = set(loaded) - set(settings)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        settings.update(loaded)
    for key in settings:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def main(argv=None):
    args = build_parser().parse_args(argv)
    settings = _merge_settings(args)

    out_dir = settings["out_dir"] or os.environ.get(OUT_DIR_ENV) or "."
    receivers = _parse_receivers(settings["receivers"])
    load_grid = (_parse_floats(settings["load_grid"])
                 if settings["load_grid"] is not None else None)
    q_grid = (_parse_floats(settings["q_grid"])
              if settings["q_grid"] is not None else None)

    if load_grid is None and q_grid is None and settings["trace"] is None:
        build_parser().error(
            "nothing to do: give --load-grid, --q-grid and/or --trace")

    spec = ExperimentSpec(
        load_grid=load_grid or (),
        q_grid=q_grid or (0.01,),
        n=settings["n"],
        receivers=receivers,
        realizations=settings["realizations"],
        seed=settings["seed"],
        out_dir=Path(out_dir),
        tol=settings["tol"],
        max_iter=settings["max_iter"],
        p_max=settings["pmax"],
        noise_power=DEFAULT_NOISE_POWER,
    )

    if load_grid is not None:
        rows = run_load_sweep(spec)
        print(f"load sweep: {len(rows)} rows -> "
              f"{spec.out_dir / 'load_sweep.csv'}")
    if q_grid is not None:
        rows = run_q_sweep(spec)
        print(f"q sweep: {len(rows)} rows -> {spec.out_dir / 'q_sweep.csv'}")
    if settings["trace"] is not None:
        k_users, kind, q, seed = _parse_trace(settings["trace"])
        report, path = run_convergence_trace(
            k_users, kind, q, seed, n=spec.n, noise_power=spec.noise_power,
            p_max=spec.p_max, tol=spec.tol, max_iter=spec.max_iter,
            out_dir=spec.out_dir)
        status = "converged" if report.converged else "did not converge"
        print(f"trace: {kind} K={k_users} {status} in "
              f"{report.iterations} iterations -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
