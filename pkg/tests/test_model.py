import math

import pytest
from hypothesis import given, strategies as st

from whittlecrawl.model import (FleetParams, InvalidParameterError, SourceParams, SourceState, active_step,
                                derive_constants, passive_orbit, passive_step)

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_table1_source1_constants(src1):
    alpha, u, u_star = derive_constants(src1)
    assert alpha == pytest.approx(math.exp(-0.7), rel=1e-15)
    assert u == pytest.approx(179.79, abs=5e-3)
    assert u_star == pytest.approx(250 / 0.7, rel=1e-14)
    assert u / (1 - alpha) == pytest.approx(u_star, rel=1e-14)
    assert u < u_star


def test_table1_source2_reset_value(table1):
    expected = (250 * 0.7 / 0.35) * (1 - math.exp(-0.35))
    assert active_step(table1.sources[1]) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(147.66, abs=5e-3)


def test_fast_decay_limit():
    p = SourceParams(10.0, 2.0, 50.0, period=2.0)
    assert p.alpha < 1e-40
    assert p.u == pytest.approx(p.u_star, rel=1e-15)


def test_tiny_content_resets_to_zero():
    p = SourceParams(1e-300, 1e-10, 1.0)
    assert active_step(p) == pytest.approx(0.0, abs=1e-300)


@pytest.mark.parametrize("field", ["lambda_rate", "xi_mean", "mu", "cost", "period"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_rejects_nonpositive(field, bad):
    kw = dict(lambda_rate=1.0, xi_mean=1.0, mu=1.0, cost=1.0, period=1.0)
    kw[field] = bad
    with pytest.raises(InvalidParameterError):
        SourceParams(**kw)


def test_passive_step_examples(src1):
    assert passive_step(src1.u_star, src1) == pytest.approx(src1.u_star, rel=1e-15)
    assert passive_step(0.0, src1) == src1.u
    x = passive_step(src1.u, src1)
    assert x == pytest.approx(src1.u * (1 + math.exp(-0.7)), rel=1e-14)
    assert x == pytest.approx(269.08, abs=0.01)


@given(lam=positive, xi=positive, mu=st.floats(0.01, 5.0), x=st.floats(0, 1e6), n=st.integers(0, 80))
def test_orbit_closed_form_matches_loop(lam, xi, mu, x, n):
    p = SourceParams(lam, xi, mu)
    y = x
    for _ in range(n):
        y = passive_step(y, p)
    assert passive_orbit(x, p, n) == pytest.approx(y, rel=1e-10, abs=1e-10 * p.u_star)


@given(lam=positive, xi=positive, mu=st.floats(0.01, 5.0), frac=st.floats(0, 3))
def test_orbit_monotone_toward_saturation(lam, xi, mu, frac):
    p = SourceParams(lam, xi, mu)
    x = frac * p.u_star
    seq = [x]
    for _ in range(30):
        seq.append(passive_step(seq[-1], p))
    tol = 1e-12 * p.u_star
    if x <= p.u_star:
        assert all(b >= a - tol for a, b in zip(seq, seq[1:]))
        assert max(seq) <= p.u_star + tol
    else:
        assert all(b <= a + tol for a, b in zip(seq, seq[1:]))
        assert min(seq) >= p.u_star - tol


def test_reachable_lattice(table1):
    for p in table1.sources:
        x = active_step(p)
        for n in range(61):
            assert x == pytest.approx((1 - p.alpha ** (n + 1)) * p.u_star, rel=1e-12)
            assert p.lattice(n + 1) == pytest.approx(x, rel=1e-12)
            x = passive_step(x, p)


def test_state_rejects_negative():
    assert SourceState(0.0).x == 0.0
    with pytest.raises(InvalidParameterError):
        SourceState(-1.0)


def test_fleet_validation(table1):
    assert table1.n == 4 and table1.total_cost == 4.0
    with pytest.raises(InvalidParameterError):
        FleetParams(table1.sources, 5.0)
    with pytest.raises(InvalidParameterError):
        FleetParams(table1.sources, 0.0)
    with pytest.raises(InvalidParameterError):
        FleetParams((SourceParams(1, 1, 1, period=1.0), SourceParams(1, 1, 1, period=2.0)), 1.0)
