import numpy as np
import pytest

from pairwell.analysis import (
    RESONANCE_WIDTH_WINDOW,
    SweepRow,
    TimeSeries,
    decay_probability,
    fit_decay_rate,
    fwhm,
    late_slope,
    summarize_sweep,
)
from pairwell.errors import ConfigError, ConvergenceError, InvariantError


def _row(D, wb, gamma, failed=False):
    lo, hi = RESONANCE_WIDTH_WINDOW
    return SweepRow(D=D, V0=1.7, W=0.3, E_g=-0.4, W_b=wb, gamma=gamma,
                    fit_window=(100.0, 900.0), fit_residual=1e-3,
                    fit_r_squared=0.999, in_resonance_window=lo < wb < hi,
                    failed=failed)


class TestTimeSeries:
    def test_requires_increasing_times(self):
        with pytest.raises(ConfigError):
            TimeSeries(np.array([0.0, 1.0, 1.0]), np.array([1, 2, 3.0]))

    def test_restrict(self):
        ts = TimeSeries(np.arange(10.0), np.arange(10.0) ** 2)
        sub = ts.restrict(t_min=3.0, t_max=7.0)
        assert sub.times[0] == 3.0 and sub.times[-1] == 7.0


class TestDecayProbability:
    def test_empty_channel(self):
        ts = TimeSeries(np.arange(5.0), np.zeros(5))
        assert np.allclose(decay_probability(ts, 1).values, 1.0)

    def test_saturated_channel(self):
        ts = TimeSeries(np.arange(5.0), np.ones(5))
        assert np.allclose(decay_probability(ts, 1).values, 0.0)

    def test_two_state_saturation(self):
        ts = TimeSeries(np.arange(5.0), np.full(5, 2.0))
        assert np.allclose(decay_probability(ts, 2).values, 0.0)

    def test_rejects_other_saturations(self):
        ts = TimeSeries(np.arange(5.0), np.zeros(5))
        with pytest.raises(ConfigError):
            decay_probability(ts, 3)


class TestDecayRateFit:
    def test_exact_exponential(self):
        t = np.linspace(0, 3, 400)
        d = TimeSeries(t, np.exp(-2.0 * t))
        fit = fit_decay_rate(d)
        assert abs(fit.gamma - 2.0) < 1e-6 * 2.0
        assert fit.r_squared > 1 - 1e-12
        assert fit.residual < 1e-10

    def test_window_restriction(self):
        t = np.linspace(0, 3000, 600)
        d = TimeSeries(t, np.exp(-1.1e-3 * t))
        fit = fit_decay_rate(d)
        # fit window keeps d in [0.05, 0.8]
        assert np.exp(-1.1e-3 * fit.window[0]) <= 0.8 + 1e-9
        assert np.exp(-1.1e-3 * fit.window[1]) >= 0.05 - 1e-9
        assert abs(fit.gamma - 1.1e-3) < 1e-9

    def test_too_few_samples(self):
        t = np.linspace(0, 1, 30)
        d = TimeSeries(t, np.full(30, 0.9))  # nothing inside the window
        with pytest.raises(ConvergenceError):
            fit_decay_rate(d)

    def test_t_min_excludes_ramp(self):
        t = np.linspace(-50, 1000, 500)
        vals = np.exp(-2e-3 * np.maximum(t, 0)) * 0.79
        fit = fit_decay_rate(TimeSeries(t, vals), t_min=0.0)
        assert fit.window[0] >= 0.0


class TestLateSlope:
    def test_linear_series(self):
        t = np.linspace(0, 100, 300)
        ts = TimeSeries(t, 1.0 + 0.5 * t)
        assert abs(late_slope(ts) - 0.5) < 1e-12

    def test_uses_final_third(self):
        t = np.linspace(0, 90, 91)
        v = np.where(t < 60, 0.0, (t - 60) * 0.2)  # growth only at the end
        assert abs(late_slope(TimeSeries(t, v)) - 0.2) < 1e-12

    def test_too_short(self):
        with pytest.raises(ConvergenceError):
            late_slope(TimeSeries(np.arange(3.0), np.arange(3.0)))


class TestFwhm:
    def test_lorentzian(self):
        gamma = 0.035
        E = np.linspace(1.0, 1.4, 2000)
        vals = 1.0 / ((E - 1.2) ** 2 + gamma ** 2)
        w = fwhm(E, vals)
        assert abs(w - 2 * gamma) < (E[1] - E[0]) + 1e-12

    def test_gaussian(self):
        sigma = 0.05
        E = np.linspace(0, 2, 4000)
        vals = np.exp(-((E - 1.0) ** 2) / (2 * sigma ** 2))
        expect = 2 * sigma * np.sqrt(2 * np.log(2))
        assert abs(fwhm(E, vals) - expect) < 1e-3

    def test_no_crossing(self):
        E = np.linspace(0, 1, 50)
        with pytest.raises(InvariantError):
            fwhm(E, np.ones(50))


class TestSweepSummary:
    def test_two_row_slope(self):
        rows = [_row(2.4, 1.7, 2e-3), _row(3.2, 1.9, 1e-3)]
        s = summarize_sweep(rows)
        expect = np.log(2e-3 / 1e-3) / (1.9 - 1.7)
        assert abs(s.C - expect) < 1e-12
        assert s.n_used == 2

    def test_resonance_rows_excluded(self):
        rows = [
            _row(2.4, 1.70, 2.0e-3),
            _row(2.8, 1.80, 1.4e-3),
            _row(3.2, 1.90, 1.0e-3),
            _row(4.2, 2.10, 5.0e-3),  # inside the resonance window: ignored
        ]
        s = summarize_sweep(rows)
        assert s.n_used == 3
        assert 4.2 in s.excluded
        assert s.r_squared > 0.99

    def test_exponential_family_recovered(self):
        wbs = np.linspace(1.6, 2.0, 6)
        rows = [_row(2.0 + i, wb, 3e-3 * np.exp(-3.5 * wb))
                for i, wb in enumerate(wbs)]
        s = summarize_sweep(rows)
        assert abs(s.C - 3.5) < 1e-9
        assert s.r_squared > 1 - 1e-12

    def test_failed_rows_skipped(self):
        rows = [_row(2.4, 1.7, 2e-3), _row(3.2, 1.9, 1e-3),
                _row(5.0, np.nan, np.nan, failed=True)]
        s = summarize_sweep(rows)
        assert s.n_used == 2

    def test_not_enough_rows(self):
        with pytest.raises(ConvergenceError):
            summarize_sweep([_row(2.4, 1.7, 2e-3)])
