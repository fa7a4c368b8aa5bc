"""
Тести ринкової аналітики: Блек-Шоулз, неявна волатильність, SVI-поверхня, Дюпір
"""

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from market.black_scholes import PRICE_TOLERANCE, VOL_LOWER, bs_call_price, bs_vega, implied_vol, implied_vol_or_edge
from market.local_vol import LOCAL_VAR_FLOOR, dupire_local_vol
from market.surface import (
    DAYS_PER_YEAR,
    MarketSurface,
    SviPillar,
    export_target_set,
    make_target_set,
    surface_implied_vol,
)
from utils.errors import ArbitrageError, ConfigError, DomainError, ImpliedVolError


def test_atm_call_price():
    assert bs_call_price(1.0, 1.0, 0.25, 0.2) == pytest.approx(0.0398776, abs=1e-7)


@pytest.mark.parametrize("forward,strike", [(1.0, 0.9), (1.0, 1.1), (1.3, 1.0)])
def test_zero_vol_and_zero_maturity_give_intrinsic(forward, strike):
    intrinsic = max(forward - strike, 0.0)
    assert bs_call_price(forward, strike, 0.5, 0.0) == intrinsic
    assert bs_call_price(forward, strike, 0.0, 0.3) == intrinsic


def test_tiny_strike_prices_the_forward():
    assert bs_call_price(1.0, 1e-8, 0.25, 0.2) == pytest.approx(1.0, abs=1e-7)


def test_negative_inputs_are_domain_errors():
    with pytest.raises(DomainError):
        bs_call_price(-1.0, 1.0, 0.25, 0.2)
    with pytest.raises(DomainError):
        bs_call_price(1.0, 1.0, 0.25, -0.2)


def test_price_shape_in_strike_and_vol():
    strikes = np.linspace(0.7, 1.3, 121)
    prices = bs_call_price(1.0, strikes, 0.2, 0.25)
    assert np.all(np.diff(prices) <= 0)
    assert np.all(prices[:-2] - 2 * prices[1:-1] + prices[2:] >= -1e-12)
    vols = np.linspace(0.01, 1.0, 50)
    assert np.all(np.diff(bs_call_price(1.0, 1.05, 0.2, vols)) >= 0)


def test_implied_vol_inverts_known_price():
    assert implied_vol(0.0398776, 1.0, 1.0, 0.25) == pytest.approx(0.2, abs=1e-6)


def _check_round_trip(sigma, strike, maturity):
    price = float(bs_call_price(1.0, strike, maturity, sigma))
    if bs_vega(1.0, strike, maturity, sigma) >= 1e-4:
        assert abs(implied_vol(price, 1.0, strike, maturity) - sigma) < 1e-8
        return
    # мала вега: або край брекету, або відновлена ціна в межах допуску
    vol, at_edge = implied_vol_or_edge(price, 1.0, strike, maturity)
    if at_edge:
        assert vol == VOL_LOWER
        with pytest.raises(ImpliedVolError):
            implied_vol(price, 1.0, strike, maturity)
    else:
        assert abs(bs_call_price(1.0, strike, maturity, vol) - price) <= PRICE_TOLERANCE


@settings(max_examples=300, deadline=None)
@given(
    sigma=st.floats(0.05, 1.0),
    strike=st.floats(0.8, 1.2),
    maturity=st.floats(0.02, 0.3),
)
def test_implied_vol_round_trip(sigma, strike, maturity):
    _check_round_trip(sigma, strike, maturity)


def test_implied_vol_round_trip_sweep():
    rng = np.random.default_rng(2024)
    draws = np.column_stack([rng.uniform(0.05, 1.0, 10_000), rng.uniform(0.8, 1.2, 10_000), rng.uniform(0.02, 0.3, 10_000)])
    for sigma, strike, maturity in draws:
        _check_round_trip(sigma, strike, maturity)


def test_price_at_lower_band_is_rejected():
    with pytest.raises(ImpliedVolError) as error:
        implied_vol(0.1, 1.1, 1.0, 0.25)
    assert error.value.band == (pytest.approx(0.1), 1.1)
    with pytest.raises(ImpliedVolError):
        implied_vol(1.0, 1.0, 1.0, 0.25)


def test_out_of_band_prices_map_to_bracket_edges():
    assert implied_vol_or_edge(0.0, 1.0, 1.05, 0.1) == (VOL_LOWER, True)
    vol, at_edge = implied_vol_or_edge(0.0398776, 1.0, 1.0, 0.25)
    assert not at_edge
    assert vol == pytest.approx(0.2, abs=1e-6)


def test_flat_surface_is_flat(flat_surface):
    for days in (5, 21, 36, 51):
        for strike in (0.8, 1.0, 1.2):
            assert surface_implied_vol(flat_surface, days / DAYS_PER_YEAR, strike) == pytest.approx(0.2, abs=1e-12)


def test_total_variance_is_flat_beyond_last_pillar(flat_surface):
    last = flat_surface.last_maturity
    for days in (60, 80, 252):
        t = days / DAYS_PER_YEAR
        np.testing.assert_array_equal(flat_surface.total_variance(t, [-0.1, 0.0, 0.1]), flat_surface.total_variance(last, [-0.1, 0.0, 0.1]))
        expected = 0.2 * np.sqrt(last / t)
        assert surface_implied_vol(flat_surface, t, 1.0) == pytest.approx(expected, abs=1e-12)


def test_pillar_is_interpolation_node(equity_surface):
    pillar = equity_surface.pillars[0]
    y = np.log(1.03)
    expected = np.sqrt(pillar.total_variance(y) / pillar.maturity)
    assert surface_implied_vol(equity_surface, pillar.maturity, 1.03) == expected


def test_total_variance_is_linear_between_pillars():
    surface = MarketSurface([
        SviPillar(t_days=21, a=0.001, b=0.0, rho=0.0, s=0.1),
        SviPillar(t_days=51, a=0.003, b=0.0, rho=0.0, s=0.1),
    ])
    t = 36 / DAYS_PER_YEAR
    assert surface_implied_vol(surface, t, 1.0) == pytest.approx(np.sqrt(0.002 / t))


def test_extrapolation_requires_flag():
    pillars = [SviPillar(t_days=21, a=0.001, b=0.0, rho=0.0, s=0.1), SviPillar(t_days=51, a=0.003, b=0.0, rho=0.0, s=0.1)]
    strict = MarketSurface(pillars)
    with pytest.raises(DomainError):
        surface_implied_vol(strict, 10 / DAYS_PER_YEAR, 1.0)
    relaxed = MarketSurface(pillars, allow_extrapolation=True)
    early = surface_implied_vol(relaxed, 10 / DAYS_PER_YEAR, 1.0)
    assert early == pytest.approx(surface_implied_vol(relaxed, 21 / DAYS_PER_YEAR, 1.0))


def test_calendar_arbitrage_is_rejected():
    with pytest.raises(ArbitrageError):
        MarketSurface([
            SviPillar(t_days=21, a=0.003, b=0.0, rho=0.0, s=0.1),
            SviPillar(t_days=51, a=0.001, b=0.0, rho=0.0, s=0.1),
        ])


def test_svi_parameter_ranges_are_validated():
    with pytest.raises(ValidationError):
        SviPillar(t_days=21, a=0.001, b=0.1, rho=1.0, s=0.1)
    with pytest.raises(ValidationError):
        SviPillar(t_days=21, a=0.001, b=-0.1, rho=0.0, s=0.1)


def test_surface_file_round_trip(tmp_path, equity_surface):
    path = str(tmp_path / "surface.json")
    equity_surface.to_file(path)
    restored = MarketSurface.from_file(path)
    for strike in (0.9, 1.0, 1.1):
        assert surface_implied_vol(restored, 0.1, strike) == surface_implied_vol(equity_surface, 0.1, strike)
    with pytest.raises(ConfigError):
        MarketSurface.from_file(str(tmp_path / "missing.json"))


def test_equity_surface_matches_atm_levels(equity_surface):
    assert surface_implied_vol(equity_surface, 21 / DAYS_PER_YEAR, 1.0) == pytest.approx(0.14)
    assert surface_implied_vol(equity_surface, 51 / DAYS_PER_YEAR, 1.0) == pytest.approx(0.135)


def test_dupire_on_flat_surface_is_flat(flat_surface):
    spots = np.linspace(0.8, 1.2, 41)
    for t in (5 / DAYS_PER_YEAR, 30 / DAYS_PER_YEAR, 50.9 / DAYS_PER_YEAR, 51 / DAYS_PER_YEAR):
        np.testing.assert_allclose(dupire_local_vol(flat_surface, t, spots), 0.2, atol=1e-6)


def test_dupire_beyond_last_pillar_hits_variance_floor(flat_surface):
    vols = dupire_local_vol(flat_surface, 80 / DAYS_PER_YEAR, np.linspace(0.9, 1.1, 5))
    np.testing.assert_allclose(vols, np.sqrt(LOCAL_VAR_FLOOR))


def test_dupire_recovers_forward_variance():
    sigma1, sigma2 = 0.2, 0.3
    t1, t2 = 21 / DAYS_PER_YEAR, 51 / DAYS_PER_YEAR
    surface = MarketSurface([
        SviPillar(t_days=21, a=sigma1 ** 2 * t1, b=0.0, rho=0.0, s=0.1),
        SviPillar(t_days=51, a=sigma1 ** 2 * t1 + sigma2 ** 2 * (t2 - t1), b=0.0, rho=0.0, s=0.1),
    ])
    assert dupire_local_vol(surface, 25 / DAYS_PER_YEAR, 1.0) == pytest.approx(sigma2, abs=1e-6)


def test_dupire_requires_positive_time(flat_surface):
    with pytest.raises(DomainError):
        dupire_local_vol(flat_surface, 0.0, 1.0)


def test_target_set_cardinality_and_flat_targets(flat_surface):
    quotes = make_target_set(flat_surface, [21, 51], [0.95, 1.0, 1.05])
    assert len(quotes) == 6
    assert all(q.target_vol == pytest.approx(0.2) for q in quotes)
    assert all(q.weight == 1.0 for q in quotes)


def test_skewed_targets_decrease_in_strike(equity_surface):
    quotes = make_target_set(equity_surface, [21], [0.95, 1.0, 1.05])
    vols = [q.target_vol for q in quotes]
    assert vols[0] > vols[1] > vols[2]


def test_vega_weights_have_unit_mean(equity_surface, tmp_path):
    quotes = make_target_set(equity_surface, [11, 51], [0.9, 1.0, 1.1], vega_weighted=True)
    weights = np.array([q.weight for q in quotes])
    assert weights.mean() == pytest.approx(1.0)
    assert weights[1] > weights[0]

    path = str(tmp_path / "targets.csv")
    export_target_set(quotes, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["t_days", "strike", "target_iv", "weight"]
    assert len(frame) == 6


@pytest.mark.slow
def test_local_vol_monte_carlo_reprices_surface(equity_surface):
    rng = np.random.default_rng(3)
    n, steps_per_day, days = 200_000, 4, 51
    dt = 1.0 / (DAYS_PER_YEAR * steps_per_day)
    log_spot = np.zeros(n)
    for step in range(days * steps_per_day):
        vol = dupire_local_vol(equity_surface, max(step, 0.5) * dt, np.exp(log_spot))
        log_spot += -0.5 * vol ** 2 * dt + vol * np.sqrt(dt) * rng.standard_normal(n)
    spots = np.exp(log_spot)
    t = days / DAYS_PER_YEAR
    for strike in (0.95, 1.0, 1.05):
        price = np.maximum(spots - strike, 0.0).mean()
        assert abs(implied_vol(price, 1.0, strike, t) - surface_implied_vol(equity_surface, t, strike)) < 0.0015
