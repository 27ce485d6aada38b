"""Experiment runner: load sweeps, q sweeps and convergence traces.

Every realization is derived from (master seed, user count, realization
index), so the same scenarios are reused across receiver kinds and q
values; rows carry the seeds needed to rebuild any run standalone.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import run_best_response_dynamics
from .errors import ReceiverUnavailableError
from .receivers import ReceiverKind, generate_codes
from .scenario import GameConfig, build_scenario

log = logging.getLogger(__name__)

DEFAULT_LOAD_GRID = (0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
DEFAULT_Q_GRID = (0.001, 0.01, 0.1, 1.0, 10.0)  # Watts
DEFAULT_RECEIVERS = (ReceiverKind.MF, ReceiverKind.DE, ReceiverKind.MMSE)
DEFAULT_NOISE_POWER = 5e-16  # Watts
DEFAULT_PROCESSING_GAIN = 32

_CODE_RESAMPLE_ATTEMPTS = 20


@dataclass
class ExperimentSpec:
    """Sweep configuration; mirrors the command-line flags."""
    load_grid: tuple = DEFAULT_LOAD_GRID
    q_grid: tuple = (0.01,)
    n: int = DEFAULT_PROCESSING_GAIN
    receivers: tuple = DEFAULT_RECEIVERS
    realizations: int = 100
    seed: int = 0
    out_dir: Path = field(default_factory=Path.cwd)
    tol: float = 1e-6
    max_iter: int = 500
    p_max: float = 100.0
    noise_power: float = DEFAULT_NOISE_POWER

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        self.out_dir = Path(self.out_dir)


def q_watts_from_joules_per_packet(q_joules, m_bits=100, rate=1e5):
    """Convert operating energy per packet (Joules) to Watts.

    A packet lasts m_bits / rate seconds, so q_W = q_J * rate / m_bits.
    Note this is 100x the Joule-to-Watt pairing quoted alongside the
    default q range; utilities divide by Watts, so Watts is the
    configuration unit everywhere in this package.
    """
    return q_joules * rate / m_bits


def instance_seed(master_seed, k_users, realization):
    """Derived integer seed for one realization; independent of receiver
    kind and q so those sweeps share scenarios."""
    ss = np.random.SeedSequence([master_seed, k_users, realization])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def build_instance(k_users, n_chips, seed, noise_power=DEFAULT_NOISE_POWER):
    """Scenario plus codebook from one integer seed.

    If the random codes come out numerically collinear (possible, rare) the
    codebook is resampled from a derived stream and the event is logged.
    """
    scenario_ss, codes_ss = np.random.SeedSequence(seed).spawn(2)
    scenario = build_scenario(k_users, scenario_ss, noise_power=noise_power)
    scenario.seed = seed
    codebook = None
    for attempt, child in enumerate(codes_ss.spawn(_CODE_RESAMPLE_ATTEMPTS)):
        candidate = generate_codes(k_users, n_chips, child)
        if k_users > n_chips:
            codebook = candidate
            break
        try:
            candidate.gram_inverse()
            codebook = candidate
            break
        except ReceiverUnavailableError:
            log.warning("collinear codebook for seed %d (attempt %d); "
                        "resampling", seed, attempt)
    if codebook is None:
        raise ReceiverUnavailableError(
            f"could not draw a usable codebook for seed {seed}")
    return scenario, codebook


def run_realization(k_users, n_chips, seed, kind, q, *, noise_power, p_max,
                    tol, max_iter):
    """One (scenario, receiver, q) equilibrium run, summarized."""
    scenario, codebook = build_instance(k_users, n_chips, seed,
                                        noise_power=noise_power)
    config = GameConfig(K=k_users, N=n_chips, q=q, p_max=p_max)
    report = run_best_response_dynamics(scenario, codebook, config,
                                        receiver=kind, tol=tol,
                                        max_iter=max_iter)
    final = report.trajectory[-1]
    return {
        "seed": seed,
        "converged": report.converged,
        "power_limited": report.power_limited,
        "iterations": report.iterations,
        "mean_utility": float(final.utility.mean()),
    }


def _sweep_cell(spec, k_users, kind, q):
    """Aggregate one (K, receiver, q) cell over all realizations.

    The cell mean averages per-realization user means; nonconverged
    realizations are excluded from the mean and counted instead.
    """
    results = []
    for rep in range(spec.realizations):
        seed = instance_seed(spec.seed, k_users, rep)
        results.append(run_realization(
            k_users, spec.n, seed, kind, q, noise_power=spec.noise_power,
            p_max=spec.p_max, tol=spec.tol, max_iter=spec.max_iter))
    used = [r["mean_utility"] for r in results if r["converged"]]
    excluded = spec.realizations - len(used)
    mean = float(np.mean(used)) if used else float("nan")
    stderr = (float(np.std(used, ddof=1) / np.sqrt(len(used)))
              if len(used) > 1 else 0.0)
    return {"mean_utility": mean, "stderr_utility": stderr,
            "used": len(used), "excluded": excluded,
            "realizations": results}


def _write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(x):
    return repr(float(x))


def run_load_sweep(spec):
    """Mean equilibrium utility per (load, receiver, q); writes
    ``load_sweep.csv`` plus a per-realization detail file.

    Loads with K/N > 1 have no decorrelator rows.  Returns the list of
    aggregate row dicts.
    """
    rows = []
    detail = []
    for load in spec.load_grid:
        k_users = int(round(load * spec.n))
        if k_users < 1:
            log.warning("skipping load %g: no users", load)
            continue
        for kind in spec.receivers:
            if kind == ReceiverKind.DE and k_users > spec.n:
                continue
            for q in spec.q_grid:
                cell = _sweep_cell(spec, k_users, kind, q)
                rows.append({"load": load, "receiver": kind, "q": q,
                             "k_users": k_users, **cell})
                for rep, r in enumerate(cell["realizations"]):
                    detail.append([_fmt(load), str(kind), _fmt(q), k_users,
                                   rep, r["seed"], int(r["converged"]),
                                   int(r["power_limited"]), r["iterations"],
                                   _fmt(r["mean_utility"])])
    _write_csv(spec.out_dir / "load_sweep.csv",
               ["load", "receiver", "q", "k_users", "used", "excluded",
                "mean_utility", "stderr_utility", "master_seed"],
               [[_fmt(r["load"]), str(r["receiver"]), _fmt(r["q"]),
                 r["k_users"], r["used"], r["excluded"],
                 _fmt(r["mean_utility"]), _fmt(r["stderr_utility"]),
                 spec.seed] for r in rows])
    _write_csv(spec.out_dir / "load_sweep_realizations.csv",
               ["load", "receiver", "q", "k_users", "realization", "seed",
                "converged", "power_limited", "iterations", "mean_utility"],
               detail)
    return rows


def run_q_sweep(spec, load=0.5):
    """Mean equilibrium utility per (q, receiver) at a fixed load; writes
    ``q_sweep.csv``.  Scenarios are shared across q values."""
    k_users = int(round(load * spec.n))
    if k_users < 1:
        raise ValueError(f"load {load} yields no users at N={spec.n}")
    rows = []
    for q in spec.q_grid:
        for kind in spec.receivers:
            if kind == ReceiverKind.DE and k_users > spec.n:
                continue
            cell = _sweep_cell(spec, k_users, kind, q)
            rows.append({"q": q, "receiver": kind, "load": load,
                         "k_users": k_users, **cell})
    _write_csv(spec.out_dir / "q_sweep.csv",
               ["q", "receiver", "load", "k_users", "used", "excluded",
                "mean_utility", "stderr_utility", "master_seed"],
               [[_fmt(r["q"]), str(r["receiver"]), _fmt(r["load"]),
                 r["k_users"], r["used"], r["excluded"],
                 _fmt(r["mean_utility"]), _fmt(r["stderr_utility"]),
                 spec.seed] for r in rows])
    return rows


def run_convergence_trace(k_users, kind, q, seed, *, n=32,
                          noise_power=DEFAULT_NOISE_POWER, p_max=100.0,
                          tol=1e-6, max_iter=500, out_dir=Path(".")):
    """Full trajectory of one dynamics run, written as a per-(t, user) CSV
    suitable for plotting power and utility against iteration."""
    scenario, codebook = build_instance(k_users, n, seed,
                                        noise_power=noise_power)
    config = GameConfig(K=k_users, N=n, q=q, p_max=p_max)
    report = run_best_response_dynamics(scenario, codebook, config,
                                        receiver=kind, tol=tol,
                                        max_iter=max_iter)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"trace_{kind}_K{k_users}_seed{seed}.csv"
    report.write_csv(path)
    return report, path
