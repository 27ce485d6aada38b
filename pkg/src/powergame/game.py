"""Per-user optimization: efficiency function, utility, best responses.

The optimal power for a fixed receiver solves the first-order condition
f'(gamma) * (gamma + q*g) = f(gamma) in the SINR variable gamma = p*g,
which at q = 0 reduces to gamma * f'(gamma) = f(gamma).  The root lies in
the concave region (above the inflection point) and is unique there.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (NoViableTransmissionError, RootFindingError,
                     UndefinedUtilityError)
from .receivers import RECEIVER_PRIORITY, ReceiverKind, gain_factor

UTILITY_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class EfficiencyFunction:
    """f(gamma) = (1 - exp(-gamma))^M, the packet-success approximation.

    Increasing, sigmoidal, f(0) = 0, f(inf) = 1; the inflection point is at
    gamma_0 = ln(M).
    """
    exponent: float  # M, total bits per packet

    def __post_init__(self):
        if self.exponent < 1:
            raise ValueError("efficiency exponent must be >= 1")

    @property
    def inflection(self):
        return float(np.log(self.exponent))

    def _check(self, gamma):
        gamma = np.asarray(gamma, dtype=np.float64)
        if np.any(gamma < 0):
            raise ValueError("SINR must be nonnegative")
        return gamma

    def value(self, gamma):
        gamma = self._check(gamma)
        return (-np.expm1(-gamma)) ** self.exponent

    def derivative(self, gamma):
        gamma = self._check(gamma)
        base = -np.expm1(-gamma)
        return self.exponent * base ** (self.exponent - 1) * np.exp(-gamma)

    def second_derivative(self, gamma):
        """f''; only well-behaved above the inflection point for M < 2."""
        gamma = self._check(gamma)
        x = np.exp(-gamma)
        m = self.exponent
        return m * x * (1.0 - x) ** (m - 2) * (m * x - 1.0)

    def __call__(self, gamma):
        return self.value(gamma)


def efficiency_for(config):
    return EfficiencyFunction(config.efficiency_exponent)


def utility(gamma, p, q, config):
    """Bits per Joule: (L/M) * R * f(gamma) / (p + q)."""
    if p + q <= 0:
        raise UndefinedUtilityError("p + q must be positive")
    eff = efficiency_for(config)
    return config.L / config.M * config.R * eff.value(gamma) / (p + q)


def utility_profile(gamma, p, q, config):
    """Vectorized utility; p + q = 0 entries (idle users) map to 0."""
    eff = efficiency_for(config)
    total = np.asarray(p, dtype=np.float64) + q
    out = np.zeros_like(total)
    np.divide(config.L / config.M * config.R * eff.value(gamma), total,
              out=out, where=total > 0)
    return out


def _solve_target_sinr_many(g, q, eff, tol=1e-9):
    """Vectorized target-SINR solve, one root per (g, q) pair.

    Bracketed bisection on [gamma_0, hi] with hi doubled until the
    first-order condition changes sign, then a Newton polish.
    """
    g = np.asarray(g, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any(g <= 0):
        raise ValueError("gain factors must be positive")
    if np.any(q < 0):
        raise ValueError("operating powers must be nonnegative")
    if eff.exponent <= 1:
        raise ValueError("solver needs a strictly sigmoidal f (M > 1)")
    c = q * g

    def phi(gamma):
        return eff.derivative(gamma) * (gamma + c) - eff.value(gamma)

    gamma0 = eff.inflection
    lo = np.full_like(c, gamma0)
    hi = np.full_like(c, gamma0 + 1.0)
    for _ in range(200):
        open_mask = phi(hi) > 0
        if not np.any(open_mask):
            break
        lo[open_mask] = hi[open_mask]
        hi[open_mask] = hi[open_mask] * 2.0
    else:
        raise RootFindingError("no sign change found while expanding",
                               bracket=(float(lo.max()), float(hi.max())))

    while np.any(hi - lo > 1e-6):
        mid = 0.5 * (lo + hi)
        positive = phi(mid) > 0
        lo = np.where(positive, mid, lo)
        hi = np.where(positive, hi, mid)

    gamma = 0.5 * (lo + hi)
    for _ in range(30):
        slope = eff.second_derivative(gamma) * (gamma + c)
        step = np.zeros_like(gamma)
        np.divide(phi(gamma), slope, out=step, where=slope != 0)
        gamma = np.clip(gamma - step, lo, hi)
        if np.all(np.abs(step) < tol * 1e-3):
            break
    if np.any(np.abs(phi(gamma)) > 1e-8):
        worst = int(np.argmax(np.abs(phi(gamma))))
        raise RootFindingError(
            f"Newton polish did not converge (residual {phi(gamma)[worst]:g})",
            bracket=(float(lo[worst]), float(hi[worst])))
    return gamma


def solve_target_sinr(g, q, eff, tol=1e-9):
    """Equilibrium SINR target gamma* > gamma_0 for one user.

    Solves f'(gamma) (gamma + q g) = f(gamma); nondecreasing in q, and at
    q = 0 it reduces to the gamma f'(gamma) = f(gamma) lower bound.
    """
    return float(_solve_target_sinr_many(np.array([g]), np.array([q]),
                                         eff, tol)[0])


@dataclass
class Strategy:
    """One user's action: transmit power plus receiver choice."""
    p: float
    receiver: ReceiverKind


def best_response_power(k, kind, powers, scenario, codes, config):
    """Utility-maximizing power for user k with everyone else fixed.

    Returns min(gamma*/g_k, p_max).  Unclamped responses land strictly
    above the inflection-point power gamma_0/g_k.
    """
    g = gain_factor(kind, k, powers, scenario.receive_gains(k), codes,
                    scenario.noise_power,
                    exclude=int(scenario.exclusions()[k]))
    if g <= 0 or not np.isfinite(g):
        raise NoViableTransmissionError(f"user {k} has no usable channel")
    eff = efficiency_for(config)
    target = solve_target_sinr(g, float(config.q_for(kind)[k]), eff)
    return min(target / g, config.p_max)


def best_response_strategy(k, powers, scenario, codes, config,
                           receiver_set=RECEIVER_PRIORITY):
    """Jointly best (receiver, power) for user k, everyone else fixed.

    Each candidate receiver is optimized separately and the utilities are
    compared; ties within 1e-12 relative go to MMSE, then DE, then MF.
    """
    eff = efficiency_for(config)
    candidates = {}
    for kind in receiver_set:
        g = gain_factor(kind, k, powers, scenario.receive_gains(k), codes,
                        scenario.noise_power,
                        exclude=int(scenario.exclusions()[k]))
        if g <= 0 or not np.isfinite(g):
            continue
        q_k = float(config.q_for(kind)[k])
        target = solve_target_sinr(g, q_k, eff)
        p = min(target / g, config.p_max)
        candidates[kind] = (p, utility(p * g, p, q_k, config))
    if not candidates:
        raise NoViableTransmissionError(f"user {k} has no usable channel")
    best_u = max(u for _, u in candidates.values())
    for kind in RECEIVER_PRIORITY:
        if kind in candidates:
            p, u = candidates[kind]
            if u >= best_u * (1.0 - UTILITY_TIE_RTOL):
                return Strategy(p=p, receiver=kind)
    raise AssertionError("unreachable: priority covers all kinds")
