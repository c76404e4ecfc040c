import numpy as np
import pytest

from pairwell.errors import ConfigError
from pairwell.fields import (
    FieldConfig,
    default_ramp_duration,
    envelope,
    laser_vector_potential,
    sauter_step,
    well_potential,
    well_profile,
)


def _laser_cfg(T=100.0, dT=20.0):
    return FieldConfig(V0=1.726, D=3.2, W=0.3, T=T, dT=dT,
                       laser_on=True, A0=0.3 / 0.45, omega=0.45)


class TestSauterStep:
    def test_midpoint(self):
        assert sauter_step(0.0, 0.3) == 0.5

    def test_complementarity(self):
        x = np.linspace(-5, 5, 101)
        assert np.allclose(sauter_step(x, 0.7) + sauter_step(-x, 0.7), 1.0)

    def test_value_at_one_width(self):
        # 0.5 * (1 + tanh 1), evaluated independently from the closed form
        assert np.isclose(sauter_step(0.3, 0.3), 0.8807970779778823, atol=1e-15)

    def test_monotone_and_bounded(self):
        # range kept inside float saturation of tanh (|x/W| < 19)
        x = np.linspace(-4.5, 4.5, 401)
        s = sauter_step(x, 0.3)
        assert np.all(np.diff(s) > 0)
        assert np.all((s > 0) & (s < 1))

    def test_rejects_bad_width(self):
        with pytest.raises(ConfigError):
            sauter_step(1.0, 0.0)


class TestEnvelope:
    def test_segment_endpoints(self):
        cfg = _laser_cfg(T=100.0, dT=20.0)
        assert envelope(-20.0, cfg) == 0.0
        assert envelope(0.0, cfg) == 1.0
        assert envelope(100.0, cfg) == 1.0
        assert np.isclose(envelope(120.0, cfg), 0.0)
        assert envelope(-25.0, cfg) == 0.0
        assert envelope(130.0, cfg) == 0.0

    def test_half_ramp_values(self):
        cfg = _laser_cfg(T=100.0, dT=20.0)
        assert np.isclose(envelope(-10.0, cfg), 0.5)
        assert np.isclose(envelope(110.0, cfg), 0.5)

    def test_bounded_and_smooth(self):
        cfg = _laser_cfg(T=37.0, dT=11.0)
        t = np.linspace(-15, 55, 7001)
        f = envelope(t, cfg)
        assert np.all((f >= 0) & (f <= 1))
        deriv = np.abs(np.diff(f) / np.diff(t))
        assert np.max(deriv) <= np.pi / (2 * 11.0) + 1e-9

    def test_continuous_at_joints(self):
        cfg = _laser_cfg(T=50.0, dT=8.0)
        for t0 in (-8.0, 0.0, 50.0, 58.0):
            left = envelope(t0 - 1e-9, cfg)
            right = envelope(t0 + 1e-9, cfg)
            assert abs(left - right) < 1e-8


class TestWellPotential:
    def test_depth_at_center(self):
        cfg = FieldConfig(V0=1.5, D=6.0, W=0.3, T=10.0, dT=2.0)
        v = well_potential(0.0, 5.0, cfg)
        assert np.isclose(v, -1.5, atol=1.5 * 1e-4)

    def test_half_depth_at_edge(self):
        cfg = FieldConfig(V0=1.5, D=6.0, W=0.3, T=10.0, dT=2.0)
        v = well_potential(3.0, 5.0, cfg)
        assert np.isclose(v, -0.75, atol=0.02)

    def test_zero_before_turn_on(self):
        cfg = FieldConfig(V0=1.5, D=3.0, W=0.3, T=10.0, dT=2.0)
        x = np.linspace(-10, 10, 41)
        assert np.allclose(well_potential(x, -2.0, cfg), 0.0)

    def test_symmetric_and_non_positive(self):
        cfg = FieldConfig(V0=2.0, D=3.2, W=0.3, T=10.0, dT=2.0)
        x = np.linspace(-30, 30, 601)
        v = well_profile(x, cfg)
        assert np.allclose(v, v[::-1])
        assert np.all(v <= 0)
        assert abs(v[0]) < 1e-10


class TestLaser:
    def test_zero_on_wavefront(self):
        cfg = _laser_cfg()
        assert np.isclose(laser_vector_potential(3.0, 3.0, cfg), 0.0)

    def test_peak_field_relation(self):
        # E0 = A0*omega = 0.3 when A0 = 0.3/0.45 = 2/3
        cfg = _laser_cfg()
        assert np.isclose(cfg.A0, 2.0 / 3.0)
        assert np.isclose(cfg.peak_field, 0.3)

    def test_zero_when_envelope_zero(self):
        cfg = _laser_cfg(T=50.0, dT=10.0)
        assert laser_vector_potential(1.0, -10.0, cfg) == 0.0

    def test_requires_laser_on(self):
        cfg = FieldConfig(V0=1.0, D=3.0, W=0.3, T=10.0, dT=2.0)
        with pytest.raises(ConfigError):
            laser_vector_potential(0.0, 1.0, cfg)

    def test_time_independent_without_laser_on_plateau(self):
        cfg = FieldConfig(V0=1.0, D=3.0, W=0.3, T=30.0, dT=5.0)
        x = np.linspace(-10, 10, 51)
        assert np.allclose(well_potential(x, 3.0, cfg), well_potential(x, 27.0, cfg))


class TestFieldConfig:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ConfigError):
            FieldConfig(V0=-1.0, D=3.0, W=0.3)
        with pytest.raises(ConfigError):
            FieldConfig(V0=1.0, D=0.0, W=0.3)
        with pytest.raises(ConfigError):
            FieldConfig(V0=1.0, D=3.0, W=0.3, laser_on=True, omega=0.0)

    def test_default_ramps(self):
        assert default_ramp_duration(False) == 10.0
        assert np.isclose(default_ramp_duration(True, 0.45), 20 * np.pi / 0.45)
        with pytest.raises(ConfigError):
            default_ramp_duration(True, 0.0)
