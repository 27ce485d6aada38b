"""Synchronous best-response dynamics and equilibrium diagnostics.

The update p(t) = best_response(p(t-1)) is applied to all users at once.
Convergence is detected through the fixed-point residual: the candidate
response to the current profile is compared against the profile itself, so
a run that converges after one update reports exactly one iteration (the
decorrelator always does, since its SINR ignores other users' powers).
"""
import csv
from dataclasses import dataclass

import numpy as np

from .game import _solve_target_sinr_many, efficiency_for, utility_profile
from .receivers import RECEIVER_PRIORITY, ReceiverKind, gain_factors

# receiver policy value for "players choose their receiver each round"
FREE_CHOICE = "free"

# consecutive all-iteration clamping threshold for the power-limited flag
CLAMP_STREAK_LIMIT = 50

_UTILITY_TIE_RTOL = 1e-12


@dataclass
class PowerProfile:
    """Strategy profile: per-user powers and receiver kinds."""
    p: np.ndarray
    receivers: tuple


@dataclass
class TrajectoryPoint:
    t: int
    p: np.ndarray
    gamma: np.ndarray
    utility: np.ndarray
    receivers: tuple


@dataclass
class ParetoProbe:
    """Result of scaling all equilibrium powers by a common factor."""
    alpha: float
    all_improved: bool
    utility_delta: np.ndarray


@dataclass
class DeviationReport:
    """Unilateral-deviation audit of a profile."""
    max_power_residual: float
    max_utility_gain: float
    power_residual: np.ndarray
    utility_gain: np.ndarray


@dataclass
class EquilibriumReport:
    trajectory: list
    converged: bool
    iterations: int
    fixed_point_residual: float
    power_limited: bool
    final: PowerProfile
    pareto: ParetoProbe | None = None

    def write_csv(self, path):
        """One row per (iteration, user) with power, SINR and utility."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "user", "receiver", "p", "gamma", "utility"])
            for pt in self.trajectory:
                for k in range(len(pt.p)):
                    writer.writerow([pt.t, k, str(pt.receivers[k]),
                                     repr(float(pt.p[k])),
                                     repr(float(pt.gamma[k])),
                                     repr(float(pt.utility[k]))])


def allowed_receivers(k_users, processing_gain):
    """Receiver kinds usable at this load (DE needs K <= N)."""
    return tuple(kind for kind in RECEIVER_PRIORITY
                 if kind != ReceiverKind.DE or k_users <= processing_gain)


def _gains_by_kind(kinds, p, scenario, codes):
    return {kind: gain_factors(kind, p, scenario.gain_matrix(), codes,
                               scenario.noise_power, scenario.exclusions())
            for kind in kinds}


def _gather(g_by_kind, receivers):
    return np.array([g_by_kind[kind][k] for k, kind in enumerate(receivers)])


def _gather_q(config, receivers):
    return np.array([config.q_for(kind)[k] for k, kind in enumerate(receivers)])


def _respond_fixed(g, q, eff, p_max):
    target = _solve_target_sinr_many(g, q, eff)
    unclamped = target / g
    clamped = unclamped > p_max
    return np.where(clamped, p_max, unclamped), clamped


def _respond_free(g_by_kind, config, eff):
    """Per-user best (receiver, power); ties resolved MMSE > DE > MF."""
    kinds = [k for k in RECEIVER_PRIORITY if k in g_by_kind]
    p_best = None
    u_best = None
    r_best = None
    clamped_best = None
    for kind in kinds:
        g = g_by_kind[kind]
        q = config.q_for(kind)
        p_cand, clamped = _respond_fixed(g, q, eff, config.p_max)
        u_cand = utility_profile(p_cand * g, p_cand, q, config)
        if p_best is None:
            p_best, u_best, clamped_best = p_cand, u_cand, clamped
            r_best = np.full(len(p_cand), kind, dtype=object)
        else:
            better = u_cand > u_best * (1.0 + _UTILITY_TIE_RTOL)
            p_best = np.where(better, p_cand, p_best)
            u_best = np.where(better, u_cand, u_best)
            clamped_best = np.where(better, clamped, clamped_best)
            r_best[better] = kind
    return p_best, tuple(r_best), clamped_best


def _relative_gap(p_new, p_old):
    delta = np.abs(p_new - p_old)
    rel = np.full_like(delta, np.inf)
    np.divide(delta, p_old, out=rel, where=p_old > 0)
    rel[delta == 0] = 0.0
    return float(rel.max())


def run_best_response_dynamics(scenario, codes, config,
                               receiver=ReceiverKind.MMSE,
                               initial_power=None, tol=1e-6, max_iter=500,
                               pareto_alpha=None):
    """Iterate the synchronous best-response map to a Nash equilibrium.

    Parameters
    ----------
    receiver : a ReceiverKind every user is forced to use, or ``"free"``
        to let each user pick the utility-maximizing receiver each round.
    initial_power : starting powers; defaults to 1e-3 * p_max for everyone.
    tol : relative fixed-point tolerance on powers.
    pareto_alpha : if given, a Pareto probe at this scale factor is run on
        the final profile and attached to the report.

    Returns an EquilibriumReport; hitting max_iter yields a report with
    ``converged=False`` rather than an exception.
    """
    if config.K != scenario.K:
        raise ValueError("config.K does not match the scenario")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    eff = efficiency_for(config)
    if initial_power is None:
        p = np.full(scenario.K, 1e-3 * config.p_max)
    else:
        p = np.asarray(initial_power, dtype=np.float64).copy()
        if p.shape != (scenario.K,):
            raise ValueError("initial power vector has the wrong length")
        if np.any(p < 0) or np.any(p > config.p_max):
            raise ValueError("initial powers must lie in [0, p_max]")

    free = receiver == FREE_CHOICE
    if free:
        kinds = allowed_receivers(scenario.K, codes.processing_gain)
        receivers = tuple([ReceiverKind.MMSE] * scenario.K)
    else:
        kinds = (receiver,)
        receivers = tuple([receiver] * scenario.K)

    trajectory = []
    converged = False
    residual = np.inf
    clamp_streak = 0
    power_limited = False
    t = 0
    for t in range(max_iter + 1):
        g_by_kind = _gains_by_kind(kinds, p, scenario, codes)
        g = _gather(g_by_kind, receivers)
        gamma = p * g
        u = utility_profile(gamma, p, _gather_q(config, receivers), config)
        trajectory.append(TrajectoryPoint(t=t, p=p.copy(), gamma=gamma,
                                          utility=u, receivers=receivers))
        if free:
            p_next, r_next, clamped = _respond_free(g_by_kind, config, eff)
        else:
            p_next, clamped = _respond_fixed(g_by_kind[receiver],
                                             config.q_for(receiver), eff,
                                             config.p_max)
            r_next = receivers
        clamp_streak = clamp_streak + 1 if bool(np.any(clamped)) else 0
        if clamp_streak > CLAMP_STREAK_LIMIT:
            power_limited = True
        residual = _relative_gap(p_next, p)
        if residual < tol and r_next == receivers:
            converged = True
            break
        if t == max_iter:
            break
        p, receivers = p_next, r_next

    final = PowerProfile(p=trajectory[-1].p, receivers=trajectory[-1].receivers)
    if np.any(final.p >= config.p_max):
        power_limited = True
    report = EquilibriumReport(trajectory=trajectory, converged=converged,
                               iterations=t,
                               fixed_point_residual=residual,
                               power_limited=power_limited, final=final)
    if pareto_alpha is not None:
        report.pareto = pareto_probe(final, pareto_alpha, scenario, codes,
                                     config)
    return report


def profile_state(p, receivers, scenario, codes, config):
    """(gain factors, SINRs, utilities) for an arbitrary profile."""
    g_by_kind = _gains_by_kind(set(receivers), p, scenario, codes)
    g = _gather(g_by_kind, receivers)
    gamma = p * g
    u = utility_profile(gamma, p, _gather_q(config, receivers), config)
    return g, gamma, u


def verify_equilibrium(profile, scenario, codes, config, receiver_set=None,
                       grid_points=200):
    """Audit a profile against unilateral deviations.

    Recomputes each user's exact best response under its own receiver (power
    residual) and scans a log-spaced power grid for every receiver kind in
    ``receiver_set`` (utility gain).  The exact best-response power per kind
    is appended to the grid, so the gain bound is not limited by grid
    resolution.
    """
    eff = efficiency_for(config)
    p = np.asarray(profile.p, dtype=np.float64)
    if receiver_set is None:
        receiver_set = allowed_receivers(scenario.K, codes.processing_gain)
    g_by_kind = _gains_by_kind(set(receiver_set) | set(profile.receivers),
                               p, scenario, codes)
    g_own = _gather(g_by_kind, profile.receivers)
    q_own = _gather_q(config, profile.receivers)
    u_own = utility_profile(p * g_own, p, q_own, config)

    target_own = _solve_target_sinr_many(g_own, q_own, eff)
    p_star = np.minimum(target_own / g_own, config.p_max)
    delta = np.abs(p_star - p)
    power_residual = np.full_like(delta, np.inf)
    np.divide(delta, p, out=power_residual, where=p > 0)
    power_residual[delta == 0] = 0.0

    grid = np.geomspace(config.p_max * 1e-8, config.p_max, grid_points)
    u_deviate = np.full(scenario.K, -np.inf)
    for kind in receiver_set:
        g = g_by_kind[kind]
        q = config.q_for(kind)
        target = _solve_target_sinr_many(g, q, eff)
        p_exact = np.minimum(target / g, config.p_max)
        cand = np.concatenate([np.broadcast_to(grid, (scenario.K,
                                                      grid_points)),
                               p_exact[:, None]], axis=1)
        gamma = cand * g[:, None]
        f_val = eff.value(gamma)
        u_cand = (config.L / config.M * config.R * f_val
                  / (cand + q[:, None]))
        u_deviate = np.maximum(u_deviate, u_cand.max(axis=1))

    gain = np.zeros(scenario.K)
    positive = u_own > 0
    gain[positive] = (u_deviate[positive] - u_own[positive]) / u_own[positive]
    gain[~positive] = np.where(u_deviate[~positive] > 0, np.inf, 0.0)
    return DeviationReport(max_power_residual=float(power_residual.max()),
                           max_utility_gain=float(gain.max()),
                           power_residual=power_residual,
                           utility_gain=gain)


def pareto_probe(profile, alpha, scenario, codes, config):
    """Scale every user's power by alpha (receivers fixed) and compare
    utilities against the unscaled profile."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")
    p = np.asarray(profile.p, dtype=np.float64)
    _, _, u_base = profile_state(p, profile.receivers, scenario, codes,
                                 config)
    _, _, u_scaled = profile_state(alpha * p, profile.receivers, scenario,
                                   codes, config)
    delta = u_scaled - u_base
    return ParetoProbe(alpha=alpha, all_improved=bool(np.all(delta > 0)),
                       utility_delta=delta)
