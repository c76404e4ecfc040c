"""External field configuration: binding well, temporal envelope, laser.

The binding well is a smooth double-step (Sauter-type) electrostatic
potential; its potential energy for an electron is

    well_potential(x, t) = -V0 * [S(x + D/2) - S(x - D/2)] * f(t)

with S(x) = (1 + tanh(x/W)) / 2.  The envelope f(t) ramps the field on
over a time dT with a sin^2 shoulder, holds a plateau of duration T and
ramps off with the mirrored cos^2 shoulder.  The optional laser is a
traveling wave described by its vector potential

    A_y(x, t) = A0 * f(t) * sin(omega * (t - x)).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class FieldConfig:
    """Well, laser and envelope parameters (natural units).

    V0: well depth; D: well width parameter; W: edge extent of each step.
    A0, omega: laser amplitude and angular frequency (peak electric field
    E0 = A0 * omega).  T: plateau duration; dT: ramp duration.
    """

    V0: float
    D: float
    W: float = 0.3
    T: float = 0.0
    dT: float = 5.0
    laser_on: bool = False
    A0: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if self.V0 < 0 or self.D <= 0 or self.W <= 0:
            raise ConfigError(
                f"well parameters out of range: V0={self.V0}, D={self.D}, W={self.W}"
            )
        if self.T < 0 or self.dT < 0:
            raise ConfigError(f"durations must be non-negative: T={self.T}, dT={self.dT}")
        if self.laser_on and self.omega <= 0:
            raise ConfigError("laser_on requires omega > 0")

    @property
    def peak_field(self) -> float:
        """Peak laser electric field E0 = A0 * omega (fraction of the critical field)."""
        return self.A0 * self.omega

    @property
    def t_start(self) -> float:
        return -self.dT

    @property
    def t_end(self) -> float:
        return self.T + self.dT


def default_ramp_duration(laser_on: bool, omega: float = 0.0) -> float:
    """Ramp long enough that the free vacuum maps adiabatically onto the
    dressed vacuum: ten laser cycles when a laser is present, ten Compton
    times otherwise (calibrated so a ramped-only subcritical well leaves
    the pair number below 1e-3)."""
    if laser_on:
        if omega <= 0:
            raise ConfigError("laser ramp needs omega > 0")
        return 10.0 * 2.0 * math.pi / omega
    return 10.0


def sauter_step(x, W: float):
    """Smooth unit step S(x) = (1 + tanh(x/W)) / 2 with edge extent W > 0."""
    if W <= 0:
        raise ConfigError(f"step extent must be positive, got W={W}")
    return 0.5 * (1.0 + np.tanh(np.asarray(x, dtype=float) / W))


def envelope(t, cfg: FieldConfig):
    """Turn-on/plateau/turn-off envelope f(t), C^1 and valued in [0, 1].

    sin^2 ramp on [-dT, 0], unity on [0, T], cos^2 ramp on [T, T + dT],
    zero outside.
    """
    t = np.asarray(t, dtype=float)
    f = np.zeros_like(t)
    if cfg.dT > 0:
        # strict inequalities at -dT and T+dT make the off state exactly zero
        on = (t > -cfg.dT) & (t < 0)
        f = np.where(on, np.sin(np.pi * (t - cfg.dT) / (2.0 * cfg.dT)) ** 2, f)
        off = (t > cfg.T) & (t < cfg.T + cfg.dT)
        f = np.where(off, np.cos(np.pi * (t - cfg.T) / (2.0 * cfg.dT)) ** 2, f)
    plateau = (t >= 0) & (t <= cfg.T)
    f = np.where(plateau, 1.0, f)
    return f if f.ndim else float(f)


def well_profile(x, cfg: FieldConfig):
    """Static well shape at full strength: -V0 * [S(x + D/2) - S(x - D/2)].

    This is the electron potential energy (charge already folded in); it is
    <= 0 everywhere and tends to 0 as |x| -> infinity.
    """
    return -cfg.V0 * (sauter_step(np.asarray(x) + cfg.D / 2.0, cfg.W)
                      - sauter_step(np.asarray(x) - cfg.D / 2.0, cfg.W))


def well_potential(x, t, cfg: FieldConfig):
    """Time-dependent well potential energy: well_profile(x) * f(t)."""
    return well_profile(x, cfg) * envelope(t, cfg)


def laser_vector_potential(x, t, cfg: FieldConfig):
    """Traveling-wave vector potential A_y(x, t) = A0 * f(t) * sin(omega*(t - x)).

    The x-dependence is kept (a genuine traveling wave) so that the momentum
    distribution of created positrons can develop a forward/backward
    asymmetry.
    """
    if not cfg.laser_on:
        raise ConfigError("laser_vector_potential called with laser_on=False")
    x = np.asarray(x, dtype=float)
    return cfg.A0 * envelope(t, cfg) * np.sin(cfg.omega * (np.asarray(t, dtype=float) - x))
