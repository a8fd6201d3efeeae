"""Step-size sequences and the timescale-separation checks."""

import numpy as np
import pytest

from opac import ScheduleSet, default_schedule, rates, validate_assumptions


def test_default_constants_and_rates():
    s = default_schedule()
    assert (s.alpha_coef, s.beta_coef, s.lambda_coef) == (101.0, 100.0, 0.025)
    assert (s.eps_alpha, s.eps_beta, s.t0) == (0.501, 0.751, 1e5)
    assert s.eps_lambda == 0.5
    a0, b0, l0 = rates(s, 0)
    assert a0 == pytest.approx(101.0 / 1e5**0.501, abs=1e-15)
    assert b0 == pytest.approx(100.0 / 1e5**0.751, abs=1e-15)
    assert l0 == pytest.approx(0.025 / 1e5**0.5, abs=1e-15)
    # frozen magnitudes
    assert a0 == pytest.approx(0.3157340161, abs=1e-9)
    assert b0 == pytest.approx(0.0175792361, abs=1e-9)
    assert l0 == pytest.approx(7.905694150e-05, abs=1e-13)


def test_rates_strictly_decrease_and_order():
    s = default_schedule(0.1)
    prev = rates(s, 0)
    for t in (1, 10, 1_000, 100_000, 10_000_000):
        cur = rates(s, t)
        assert all(c < p for c, p in zip(cur, prev))
        prev = cur
        alpha, beta, _ = cur
        assert beta < alpha  # actor never outruns the critic


def test_timescale_ratio_separates():
    # beta_t / alpha_t -> 0: three-timescale separation in the large-t limit
    s = default_schedule()
    ratio_early = rates(s, 0)[1] / rates(s, 0)[0]
    ratio_late = rates(s, 10_000_000)[1] / rates(s, 10_000_000)[0]
    assert ratio_late < 0.35 * ratio_early


def test_constructor_guards():
    with pytest.raises(ValueError):
        ScheduleSet(0.0, 1.0, 1.0, 0.6, 0.8, 0.1, 1.0)
    with pytest.raises(ValueError):
        ScheduleSet(1.0, 1.0, 1.0, 0.6, 0.8, -0.1, 1.0)
    with pytest.raises(ValueError):
        ScheduleSet(1.0, 1.0, 1.0, 0.6, 0.8, 0.1, 0.0)
    # out-of-window exponents still construct; only validate_assumptions objects
    ScheduleSet(1.0, 2.0, 1.0, 0.4, 0.3, 3.0, 1.0)


def test_validate_accepts_in_window_settings():
    assert validate_assumptions(default_schedule(0.1)) == []
    assert validate_assumptions(default_schedule(0.0)) == []


def test_validate_flags_each_violation():
    # eps_alpha below 1/2
    bad_alpha = ScheduleSet(101.0, 100.0, 0.025, 0.4, 0.751, 0.1, 1e5)
    assert any("eps_alpha" in m for m in validate_assumptions(bad_alpha))
    # actor faster than critic
    bad_coef = ScheduleSet(100.0, 101.0, 0.025, 0.501, 0.751, 0.1, 1e5)
    assert any("beta_coef" in m for m in validate_assumptions(bad_coef))
    # eps_beta above 1
    bad_beta = ScheduleSet(101.0, 100.0, 0.025, 0.501, 1.2, 0.1, 1e5)
    assert any("eps_beta" in m for m in validate_assumptions(bad_beta))
    # regularization decaying too fast: the chain-study value 0.5 is out of window
    fast_lambda = default_schedule(0.5)
    msgs = validate_assumptions(fast_lambda)
    assert len(msgs) == 1
    assert "eps_lambda" in msgs[0]
    assert validate_assumptions(default_schedule(2.0))  # even faster, still flagged


def test_lenient_mode_warns_instead():
    with pytest.warns(RuntimeWarning, match="eps_lambda"):
        msgs = validate_assumptions(default_schedule(2.0), strict=False)
    assert len(msgs) == 1


def test_window_boundary_is_sharp():
    # (1 - eps_beta)/2 = 0.1245 for the default exponents
    boundary = (1.0 - 0.751) / 2.0
    assert validate_assumptions(default_schedule(boundary - 1e-9)) == []
    assert validate_assumptions(default_schedule(boundary))  # equality excluded


def test_rates_are_deterministic_floats():
    s = default_schedule(0.25)
    assert rates(s, 12345) == rates(s, 12345)
    alpha, beta, lam = rates(s, 12345)
    assert isinstance(alpha, float) and isinstance(beta, float) and isinstance(lam, float)
