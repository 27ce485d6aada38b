import math

import numpy as np
import numpy.testing as npt
import pytest

import powergame as pg
from powergame.errors import UndefinedUtilityError
from powergame.game import solve_target_sinr, utility

# Frozen oracle values, computed with 50-digit arithmetic (mpmath):
# the root of gamma*f'(gamma) = f(gamma) for f = (1-e^-g)^100, the same
# first-order condition with q*g = 1, and f(6.48).
GAMMA_STAR_Q0 = 6.474600379589358
GAMMA_STAR_C1 = 6.639857162020973
F_AT_6_48 = 0.8577017787641006

EFF = pg.EfficiencyFunction(100)


def bisect_oracle(c=0.0, lo=math.log(100), hi=20.0, steps=200):
    """Independent bisection on the first-order condition, plain math ops."""
    def phi(g):
        f = (1 - math.exp(-g)) ** 100
        fp = 100 * (1 - math.exp(-g)) ** 99 * math.exp(-g)
        return fp * (g + c) - f
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_efficiency_endpoints():
    assert EFF.value(0.0) == 0.0
    assert EFF.value(np.inf) == 1.0
    assert EFF.value(50.0) > 1 - 1e-8


def test_efficiency_value_against_high_precision():
    npt.assert_allclose(EFF.value(6.48), F_AT_6_48, rtol=1e-13)


def test_efficiency_monotone():
    grid = np.linspace(0.0, 20.0, 400)
    vals = EFF.value(grid)
    assert np.all(np.diff(vals) > 0)


def _fd_step(gamma, exponent=100):
    # balance truncation against the ~M*eps rounding noise of the power:
    # shrink the step where the log-derivative M*e^-g/(1-e^-g) is steep
    log_slope = exponent * math.exp(-gamma) / (1 - math.exp(-gamma))
    return 1e-3 / max(1.0, log_slope)


def test_derivative_matches_finite_difference():
    for gamma in [0.3, 1.0, 2.5, 4.6, 6.5, 10.0, 15.0]:
        h = _fd_step(gamma)
        fd = (EFF.value(gamma + h) - EFF.value(gamma - h)) / (2 * h)
        assert abs(fd - EFF.derivative(gamma)) <= 1e-6 * abs(EFF.derivative(gamma))


def test_inflection_point_is_log_m():
    npt.assert_allclose(EFF.inflection, math.log(100), rtol=1e-15)
    # numerical second difference changes sign exactly there
    h = 1e-4
    def f2(g):
        return (EFF.value(g + h) - 2 * EFF.value(g) + EFF.value(g - h)) / h**2
    assert f2(EFF.inflection - 0.05) > 0 > f2(EFF.inflection + 0.05)


def test_second_derivative_sign():
    assert EFF.second_derivative(EFF.inflection - 0.5) > 0
    assert EFF.second_derivative(EFF.inflection + 0.5) < 0


def test_negative_gamma_rejected():
    with pytest.raises(ValueError):
        EFF.value(-0.1)
    with pytest.raises(ValueError):
        EFF.derivative(-1e-9)


def test_solver_matches_bisection_oracle_at_q0():
    got = solve_target_sinr(1.0, 0.0, EFF)
    assert abs(got - bisect_oracle(0.0)) < 1e-6
    npt.assert_allclose(got, GAMMA_STAR_Q0, rtol=1e-9)


def test_solver_matches_oracle_at_c1():
    got = solve_target_sinr(0.5, 2.0, EFF)  # q*g = 1
    assert abs(got - bisect_oracle(1.0)) < 1e-6
    npt.assert_allclose(got, GAMMA_STAR_C1, rtol=1e-9)
    assert got > GAMMA_STAR_Q0


def test_target_sits_in_concave_region():
    for qg in [0.0, 0.1, 10.0, 1e4]:
        assert solve_target_sinr(1.0, qg, EFF) > EFF.inflection


def test_target_monotone_in_q():
    targets = [solve_target_sinr(1.0, q, EFF)
               for q in np.geomspace(1e-3, 1e3, 25)]
    assert np.all(np.diff(targets) >= 0)
    assert targets[0] >= GAMMA_STAR_Q0 - 1e-9


def test_foc_residual_small():
    for qg in np.geomspace(1e-4, 1e6, 11):
        gamma = solve_target_sinr(2.0, qg / 2.0, EFF)
        residual = EFF.derivative(gamma) * (gamma + qg) - EFF.value(gamma)
        assert abs(residual) < 1e-8


def test_solver_input_validation():
    with pytest.raises(ValueError):
        solve_target_sinr(0.0, 1.0, EFF)
    with pytest.raises(ValueError):
        solve_target_sinr(1.0, -1.0, EFF)
    with pytest.raises(ValueError):
        solve_target_sinr(1.0, 1.0, pg.EfficiencyFunction(1))


def _config(**kw):
    defaults = dict(K=1, N=8, q=0.0, p_max=1e9)
    defaults.update(kw)
    return pg.GameConfig(**defaults)


def test_utility_zero_sinr():
    assert utility(0.0, 1.0, 0.5, _config()) == 0.0


def test_utility_limiting_value():
    # f -> 1 and p + q = 1 W gives R * L/M = 1e5 bits per Joule
    u = utility(1e3, 0.5, 0.5, _config())
    npt.assert_allclose(u, 1e5, rtol=1e-12)


def test_utility_halves_when_total_power_doubles():
    cfg = _config()
    u1 = utility(3.0, 0.4, 0.1, cfg)
    u2 = utility(3.0, 0.8, 0.2, cfg)
    npt.assert_allclose(u1, 2 * u2, rtol=1e-12)


def test_utility_undefined_at_zero_total_power():
    with pytest.raises(UndefinedUtilityError):
        utility(1.0, 0.0, 0.0, _config())


def _unit_gain_instance(q=0.0, p_max=1e9):
    """One user, h = 1, sigma^2 = 1, so the MF gain factor is exactly 1."""
    scenario = pg.Scenario(positions=np.array([[1.0, 0.0]]),
                           access_point=np.zeros(2),
                           next_hop=np.array([-1]),
                           receiver_nodes=np.array([-1]),
                           gain_table=np.array([[1.0]]),
                           noise_power=1.0)
    codes = pg.generate_codes(1, 8, seed=0)
    return scenario, codes, _config(q=q, p_max=p_max)


def test_best_response_power_unit_gain():
    scenario, codes, config = _unit_gain_instance()
    p = pg.best_response_power(0, pg.ReceiverKind.MF, np.array([0.0]),
                               scenario, codes, config)
    npt.assert_allclose(p, GAMMA_STAR_Q0, rtol=1e-9)


def test_best_response_power_clamps_at_p_max():
    scenario, codes, config = _unit_gain_instance(p_max=1.0)
    p = pg.best_response_power(0, pg.ReceiverKind.MF, np.array([0.0]),
                               scenario, codes, config)
    assert p == 1.0


def test_best_response_above_inflection_power():
    scenario, codes, config = _unit_gain_instance(q=0.3)
    p = pg.best_response_power(0, pg.ReceiverKind.MF, np.array([0.0]),
                               scenario, codes, config)
    assert p > EFF.inflection  # p_0 = gamma_0 / g with g = 1


def test_best_response_zeroes_utility_derivative():
    from powergame.experiments import build_instance
    scenario, codes = build_instance(6, 32, 17)
    config = pg.GameConfig(K=6, N=32, q=0.01)
    powers = np.full(6, 1e-4)
    for kind in (pg.ReceiverKind.MF, pg.ReceiverKind.MMSE):
        for k in range(6):
            p_star = pg.best_response_power(k, kind, powers, scenario,
                                            codes, config)
            def u_of(p):
                trial = powers.copy()
                trial[k] = p
                gamma = pg.sinr(kind, k, trial, scenario.receive_gains(k),
                                codes, scenario.noise_power,
                                exclude=int(scenario.exclusions()[k]))
                return utility(gamma, p, float(config.q[k]), config)
            h = 1e-5 * p_star
            slope = (u_of(p_star + h) - u_of(p_star - h)) / (2 * h)
            assert abs(slope) <= 1e-6 * u_of(p_star) / p_star


def test_best_strategy_prefers_mmse_with_shared_q():
    from powergame.experiments import build_instance
    rng = np.random.default_rng(0)
    for seed in range(5):
        scenario, codes = build_instance(8, 32, seed)
        config = pg.GameConfig(K=8, N=32, q=0.01)
        powers = rng.uniform(1e-9, 1e-5, 8)
        k = int(rng.integers(8))
        strat = pg.best_response_strategy(k, powers, scenario, codes, config)
        assert strat.receiver == pg.ReceiverKind.MMSE


def test_best_strategy_singleton_set_matches_power_op():
    from powergame.experiments import build_instance
    scenario, codes = build_instance(5, 32, 3)
    config = pg.GameConfig(K=5, N=32, q=0.02)
    powers = np.full(5, 1e-6)
    strat = pg.best_response_strategy(1, powers, scenario, codes, config,
                                      receiver_set=(pg.ReceiverKind.MF,))
    p_direct = pg.best_response_power(1, pg.ReceiverKind.MF, powers,
                                      scenario, codes, config)
    assert strat.receiver == pg.ReceiverKind.MF
    assert strat.p == p_direct


def test_single_user_ties_break_toward_mmse():
    scenario, codes, config = _unit_gain_instance(q=0.1)
    strat = pg.best_response_strategy(0, np.array([0.0]), scenario, codes,
                                      config)
    assert strat.receiver == pg.ReceiverKind.MMSE


def test_per_receiver_operating_power_changes_choice():
    # make the MMSE receiver expensive enough that MF wins
    scenario, codes, config = _unit_gain_instance(q=0.0)
    config.q_by_receiver = {pg.ReceiverKind.MMSE: np.array([50.0]),
                            pg.ReceiverKind.DE: np.array([50.0])}
    strat = pg.best_response_strategy(0, np.array([0.0]), scenario, codes,
                                      config)
    assert strat.receiver == pg.ReceiverKind.MF
