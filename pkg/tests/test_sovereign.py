import math

import numpy as np
import pandas as pd
import pytest

from prodcredit.sovereign import (
    BondQuote,
    DomainError,
    GridRangeError,
    GrowthSurface,
    LenderBeliefs,
    TaxProcess,
    gamma,
    gamma_curve,
    gamma_rate,
    implied_forward,
    price_bond,
    quote_curve,
)
from prodcredit.stochastics import SampleLaw


def axes(end=5.0, step=0.01):
    n = int(round(end / step)) + 1
    return np.array([0.0, end]), np.linspace(0.0, end, n)


@pytest.mark.parametrize('rate, expected', [(0.0, 1.0), (0.02, math.exp(0.1)), (-0.02, math.exp(-0.1))])
def test_price_examples(rate, expected):
    t_axis, s_axis = axes()
    growth = GrowthSurface.constant(rate, t_axis, s_axis)
    quote = price_bond(TaxProcess.constant(100.0), growth, 0.0, 5.0, share=0.01)
    assert quote.price == pytest.approx(expected, rel=1e-12)


def test_discount_convention_flips_the_exponent():
    t_axis, s_axis = axes()
    growth = GrowthSurface.constant(0.02, t_axis, s_axis)
    quote = price_bond(TaxProcess.constant(100.0), growth, 0.0, 5.0, discount_convention=True)
    assert quote.price == pytest.approx(math.exp(-0.1), rel=1e-12)


def test_price_is_linear_in_share():
    t_axis, s_axis = axes()
    growth = GrowthSurface.linear(0.01, 0.002, t_axis, s_axis)
    tax = TaxProcess.constant(80.0)
    one = price_bond(tax, growth, 0.0, 3.0, share=0.01).price
    three = price_bond(tax, growth, 0.0, 3.0, share=0.03).price
    assert three == pytest.approx(3 * one, rel=1e-14)
    assert one > 0


def test_out_of_grid_maturity_is_a_range_error():
    t_axis, s_axis = axes()
    growth = GrowthSurface.constant(0.02, t_axis, s_axis)
    with pytest.raises(GridRangeError):
        price_bond(TaxProcess.constant(100.0), growth, 0.0, 6.0)
    with pytest.raises(GridRangeError):
        price_bond(TaxProcess.constant(100.0), growth, 2.0, 1.0)


def test_tax_path_interpolates(tmp_path):
    p = tmp_path / 'tax.csv'
    p.write_text('t,tau\n0,100\n2,120\n')
    tax = TaxProcess.from_csv(str(p))
    assert tax.at(1.0) == pytest.approx(110.0)
    with pytest.raises(GridRangeError):
        tax.at(3.0)


@pytest.mark.parametrize('growth_kind', ['constant', 'linear'])
def test_round_trip_recovers_growth(growth_kind):
    t_axis, s_axis = axes(step=0.01)
    if growth_kind == 'constant':
        growth = GrowthSurface.constant(0.02, t_axis, s_axis)
    else:
        growth = GrowthSurface.linear(0.01, 0.004, t_axis, s_axis)
    quotes = quote_curve(TaxProcess.constant(100.0), growth, 0.0, s_axis[1:])
    implied = implied_forward(quotes)
    interior = implied.values[0][1:-1]
    assert np.max(np.abs(interior - growth.values[0][2:-1])) <= 1e-6


def sine_error(step):
    t_axis, s_axis = axes(end=4.0, step=step)
    growth = GrowthSurface.from_function(lambda t, s: 0.02 + 0.01 * math.sin(s), t_axis, s_axis)
    quotes = quote_curve(TaxProcess.constant(100.0), growth, 0.0, s_axis)
    implied = implied_forward(quotes)
    return np.max(np.abs(implied.values[0][1:-1] - growth.values[0][1:-1]))


def test_round_trip_error_is_second_order():
    coarse = sine_error(0.02)
    fine = sine_error(0.01)
    assert fine <= 1e-6
    assert 3.0 <= coarse / fine <= 5.0


def test_flat_prices_imply_zero_growth():
    quotes = [BondQuote(0.0, m, 0.01, 1.0) for m in (1.0, 2.0, 3.0, 4.0)]
    assert np.all(implied_forward(quotes).values == 0.0)


def test_non_positive_price_is_a_domain_error():
    quotes = [BondQuote(0.0, m, 0.01, p) for m, p in ((1.0, 1.0), (2.0, 0.0), (3.0, 1.0))]
    with pytest.raises(DomainError):
        implied_forward(quotes)


def test_growth_table_round_trips_through_frame():
    t_axis, s_axis = axes(end=2.0, step=0.5)
    growth = GrowthSurface.linear(0.01, 0.002, t_axis, s_axis)
    rebuilt = GrowthSurface.from_frame(growth.to_frame())
    assert np.array_equal(rebuilt.values, growth.values)


def test_growth_table_with_hole_is_rejected():
    frame = pd.DataFrame({'t': [0.0, 0.0, 1.0], 's': [0.0, 1.0, 0.0], 'f_p': [0.01, 0.01, 0.0]})
    with pytest.raises(DomainError):
        GrowthSurface.from_frame(frame)


def test_gamma_of_point_beliefs():
    est = gamma(LenderBeliefs(SampleLaw.point(0.05)), 0.0, 10.0, n_samples=100)
    assert est.value == pytest.approx(20.0, rel=1e-12)
    assert est.std_error == 0.0
    doubled = gamma(LenderBeliefs(SampleLaw.point(0.1)), 0.0, 10.0, n_samples=100)
    assert doubled.value == pytest.approx(est.value / 2, rel=1e-12)


def test_gamma_of_uniform_beliefs():
    est = gamma(LenderBeliefs(SampleLaw.uniform(0.04, 0.06)), 0.0, 10.0, n_samples=50_000, seed=2)
    assert abs(est.value - 20.0) <= 3 * est.std_error


def test_larger_beliefs_give_smaller_gamma():
    values = [gamma(LenderBeliefs(SampleLaw.point(x)), 0.0, 5.0, n_samples=10).value for x in (0.02, 0.05, 0.08)]
    assert values[0] > values[1] > values[2]


def test_non_positive_beliefs_are_rejected():
    with pytest.raises(DomainError):
        gamma(LenderBeliefs(SampleLaw.uniform(-0.01, 0.01)), 0.0, 5.0, n_samples=1000)


@pytest.mark.parametrize('rate', [0.03, -0.03])
def test_gamma_rate_recovers_exponential_trend(rate):
    times = np.arange(0.0, 2.0 + 1e-9, 0.01)
    assert np.allclose(gamma_rate(times, np.exp(rate * times)), rate, atol=1e-6)


def test_gamma_rate_of_constant_is_zero():
    assert np.all(gamma_rate([0.0, 1.0, 2.0], [5.0, 5.0, 5.0]) == 0.0)


def test_trending_beliefs_share_draws_along_t():
    beliefs = LenderBeliefs(SampleLaw.uniform(0.04, 0.06), trend=0.03)
    curve = gamma_curve(beliefs, [0.0, 0.5, 1.0, 1.5], 5.0, n_samples=2000, seed=1)
    rates = gamma_rate([g.t for g in curve], [g.value for g in curve])
    # common draws leave only the deterministic trend in log Gamma
    assert np.allclose(rates, -0.03, atol=1e-9)
