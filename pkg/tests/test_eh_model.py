import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irs_swipt.eh_model import (
    EhParams,
    InfeasibleThreshold,
    harvested_power,
    omega,
    required_input_power,
    required_input_power_direct,
)
from irs_swipt.numerics import InvalidInput

P = EhParams()


def test_omega_default_value():
    # high-precision reference: 1/(1+e^2.1)
    assert omega(P) == pytest.approx(0.10909682119561293, rel=1e-14)


def test_omega_limits():
    assert omega(EhParams(a=1e-9, b=1e-9)) == pytest.approx(0.5)
    assert omega(EhParams(a=1e3, b=1.0)) < 1e-300 or omega(EhParams(a=1e3, b=1.0)) == 0.0


def test_harvested_power_examples():
    assert harvested_power(0.0, P) == 0.0
    om = omega(P)
    assert harvested_power(P.b, P) == pytest.approx((P.m_sat / 2 - P.m_sat * om) / (1 - om), rel=1e-12)
    assert harvested_power(10.0, P) == pytest.approx(P.m_sat, rel=1e-12)


def test_harvested_power_matches_textbook_form():
    p = np.linspace(0, 0.1, 50)
    psi = P.m_sat / (1 + np.exp(-P.a * (p - P.b)))
    om = omega(P)
    ref = (psi - P.m_sat * om) / (1 - om)
    assert np.allclose(harvested_power(p, P), ref, rtol=1e-12, atol=1e-17)


def test_monotone_and_bounded():
    p = np.linspace(0, P.b + 10 / P.a, 400)
    phi = harvested_power(p, P)
    assert np.all(np.diff(phi) > 0)
    assert np.all((phi >= 0) & (phi < P.m_sat))


def test_required_input_power_examples():
    assert required_input_power(0.0, P) == 0.0
    beta = required_input_power(10e-6, P)
    assert harvested_power(beta, P) == pytest.approx(10e-6, rel=1e-9)
    assert required_input_power(harvested_power(P.b, P), P) == pytest.approx(P.b, rel=1e-12)


def test_inverse_agrees_with_direct_formula():
    mus = np.linspace(1e-3, 0.9, 30) * P.m_sat
    assert np.allclose(required_input_power(mus, P), required_input_power_direct(mus, P), rtol=1e-9)


def test_small_requirement_keeps_relative_precision():
    for mu in [1e-12, 1e-9, 1e-6]:
        assert harvested_power(required_input_power(mu, P), P) == pytest.approx(mu, rel=1e-9)


def test_threshold_errors():
    with pytest.raises(InfeasibleThreshold):
        required_input_power(P.m_sat, P)
    with pytest.raises(InvalidInput):
        required_input_power(-1e-6, P)
    with pytest.raises(InvalidInput):
        harvested_power(-1.0, P)
    with pytest.raises(InvalidInput):
        EhParams(m_sat=0.0)


def test_required_power_strictly_increasing():
    mus = np.linspace(0, 0.99, 200) * P.m_sat
    assert np.all(np.diff(required_input_power(mus, P)) > 0)


@settings(max_examples=100, deadline=None)
@given(frac=st.floats(0.0, 0.99), a=st.floats(10.0, 1000.0), b=st.floats(1e-3, 0.1))
def test_round_trip_property(frac, a, b):
    p = EhParams(m_sat=0.024, a=a, b=b)
    mu = frac * p.m_sat
    back = harvested_power(required_input_power(mu, p), p)
    assert abs(back - mu) <= 1e-9 * max(mu, 1e-12)
