"""Run configuration: schema, parsing, validation, presets.

Configuration files are flat ``key = value`` documents; ``#`` starts a
comment, blank lines are ignored, keys are case-sensitive and unknown keys
are errors.  Booleans are ``true``/``false``, lists comma-separated.
The same keys can be supplied through presets, a config file, environment
variables (``PAIRWELL_<KEY>``) and CLI flags; later sources win in that
order.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .fields import FieldConfig, default_ramp_duration

SCENARIOS = ("perturbative", "two-state", "supercritical", "sweep")


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _parse_float_list(s: str) -> list:
    return [float(tok) for tok in s.split(",") if tok.strip()]


def _parse_opt_float(s: str):
    return None if s.strip().lower() in ("none", "") else float(s)


# key -> (parser, default, help)
SCHEMA = {
    "scenario": (str, None, "one of perturbative | two-state | supercritical | sweep"),
    "method": (str, "auto", "evolution pipeline: auto | batch | adjoint"),
    "L": (float, 80.0, "box length [Compton wavelengths]"),
    "N": (int, 512, "grid points (power of two)"),
    "V0": (float, None, "well depth [m_e c^2] (ignored for sweep)"),
    "D": (float, None, "well width parameter [lambda_C] (ignored for sweep)"),
    "W": (float, 0.3, "well edge extent [lambda_C]"),
    "laser_on": (_parse_bool, None, "superimpose the traveling-wave laser"),
    "A0": (float, 0.0, "laser vector-potential amplitude"),
    "E0": (_parse_opt_float, None, "peak laser field; sets A0 = E0/omega when given"),
    "omega": (float, 0.0, "laser angular frequency [m_e c^2]"),
    "T": (float, None, "plateau duration [t_pl]"),
    "dT": (_parse_opt_float, None, "ramp duration [t_pl]; default: 10 laser cycles (laser) or 10 t_pl"),
    "dt": (float, 0.05, "time step [t_pl]"),
    "auto_dt": (_parse_bool, False, "halve dt until the step-halving ratio lands in [3, 5]"),
    "p_max": (_parse_opt_float, 4.0, "momentum cutoff of the evolved free sets; none = all modes"),
    "evolve_positive": (_parse_bool, None, "also evolve the positive free set (positron spectra)"),
    "sample_every": (float, 2.0, "scalar time-series cadence [t_pl]"),
    "snapshot_every": (_parse_opt_float, None, "identity-check/occupation snapshot cadence [t_pl]"),
    "turnoff_every": (float, 8.0, "cadence of turn-off pair-number measurements (supercritical) [t_pl]"),
    "d_stop": (_parse_opt_float, None, "stop the plateau early once d(T) falls below this"),
    "nc_band_max": (float, 4.0, "upper energy of the positive-continuum occupation band"),
    "energy_bins": (int, 200, "bins of the positron energy spectrum"),
    "energy_max": (float, 3.0, "upper edge of the positron energy spectrum"),
    "collect_amplitudes": (_parse_bool, False, "keep snapshot amplitude matrices (S-matrix checks)"),
    "workers": (int, 1, "worker processes for the state-chunk pool"),
    "out": (str, None, "output directory"),
    "seed": (int, 0, "reserved; no stochastic element uses it yet"),
    "sweep_d": (_parse_float_list, None, "well widths D for the sweep scenario"),
    "e_target": (float, -0.4, "ground-state energy target of the sweep family"),
}

_SCENARIO_DEFAULTS = {
    # laser_on, evolve_positive
    "perturbative": (True, True),
    "two-state": (True, False),
    "supercritical": (False, True),
    "sweep": (True, False),
}


@dataclass
class RunConfig:
    """Validated parameters of one run (or one sweep)."""

    scenario: str
    method: str = "auto"
    L: float = 80.0
    N: int = 512
    V0: float | None = None
    D: float | None = None
    W: float = 0.3
    laser_on: bool | None = None
    A0: float = 0.0
    E0: float | None = None
    omega: float = 0.0
    T: float | None = None
    dT: float | None = None
    dt: float = 0.05
    auto_dt: bool = False
    p_max: float | None = 4.0
    evolve_positive: bool | None = None
    sample_every: float = 2.0
    snapshot_every: float | None = None
    turnoff_every: float = 8.0
    d_stop: float | None = None
    nc_band_max: float = 4.0
    energy_bins: int = 200
    energy_max: float = 3.0
    collect_amplitudes: bool = False
    workers: int = 1
    out: str | None = None
    seed: int = 0
    sweep_d: list = field(default_factory=list)
    e_target: float = -0.4

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"scenario must be one of {', '.join(SCENARIOS)}; got {self.scenario!r}"
            )
        if self.method not in ("auto", "batch", "adjoint"):
            raise ConfigError(f"method must be auto | batch | adjoint, got {self.method!r}")
        if self.method == "auto":
            # adjoint evolves single bound states backwards: right default for
            # decay-rate work (two-state, sweep); batch covers everything else
            self.method = "adjoint" if self.scenario in ("two-state", "sweep") else "batch"
        if self.method == "adjoint" and self.scenario == "supercritical":
            raise ConfigError("supercritical runs need the batch pipeline (spectra)")
        laser_default, pos_default = _SCENARIO_DEFAULTS[self.scenario]
        if self.laser_on is None:
            self.laser_on = laser_default
        if self.evolve_positive is None:
            self.evolve_positive = pos_default
        if self.E0 is not None:
            if self.omega <= 0:
                raise ConfigError("E0 given but omega is not positive")
            self.A0 = self.E0 / self.omega
        if self.T is None:
            raise ConfigError("missing required key: T (plateau duration)")
        if self.scenario != "sweep":
            if self.V0 is None or self.D is None:
                raise ConfigError("missing required keys: V0 and D")
        else:
            if not self.sweep_d:
                raise ConfigError("sweep scenario needs sweep_d (list of well widths)")
            if not (-1.0 < self.e_target < 1.0):
                raise ConfigError(f"e_target must lie in the gap, got {self.e_target}")
        if self.dT is None:
            self.dT = default_ramp_duration(self.laser_on, self.omega)

        # scenario consistency
        if self.scenario in ("perturbative", "two-state"):
            if not self.laser_on:
                raise ConfigError(f"{self.scenario} runs need laser_on = true")
            if self.V0 is not None and self.V0 >= 2.0:
                raise ConfigError(
                    f"scenario {self.scenario} needs a subcritical well (V0 < 2), got V0={self.V0}"
                )
        if self.scenario == "supercritical":
            if self.V0 <= 2.0:
                raise ConfigError(
                    f"supercritical scenario needs V0 > 2, got V0={self.V0}"
                )
            if self.laser_on:
                raise ConfigError("supercritical scenario runs without a laser")
        if self.laser_on and self.omega <= 0:
            raise ConfigError("laser_on = true needs omega > 0")
        if self.laser_on:
            # the traveling wave must close periodically over the box,
            # otherwise the seam radiates spurious pairs
            cycles = self.omega * self.L / (2.0 * math.pi)
            if abs(cycles - round(cycles)) > 1e-9:
                n = max(1, round(cycles))
                good = 2.0 * math.pi * n / self.omega
                raise ConfigError(
                    f"omega*L/(2*pi) = {cycles:.4f} must be an integer for a periodic "
                    f"traveling wave; nearest valid L = {good!r}"
                )

        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.sample_every < self.dt:
            raise ConfigError("sample_every must be >= dt")
        if self.snapshot_every is None:
            self.snapshot_every = min(200.0, max(10.0, self.T / 8.0))
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.p_max is not None:
            p_nyq = math.pi * self.N / self.L
            if not (0 < self.p_max <= p_nyq):
                raise ConfigError(
                    f"p_max must lie in (0, {p_nyq:.2f}] for this grid, got {self.p_max}"
                )
        if self.energy_bins < 2 or self.energy_max <= 1.0:
            raise ConfigError("energy spectrum needs energy_bins >= 2 and energy_max > 1")

    def field_config(self, V0: float | None = None, D: float | None = None) -> FieldConfig:
        """FieldConfig of this run (or of one sweep row when V0/D given)."""
        return FieldConfig(
            V0=self.V0 if V0 is None else V0,
            D=self.D if D is None else D,
            W=self.W,
            T=self.T,
            dT=self.dT,
            laser_on=self.laser_on,
            A0=self.A0,
            omega=self.omega,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def content_hash(self) -> str:
        """Deterministic id of the physics-relevant configuration.

        Output location and worker count do not enter: runs that must be
        byte-identical share the id.
        """
        d = self.to_dict()
        d.pop("out")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse a key = value document into a validated RunConfig.

    Unknown keys, duplicate keys and unparsable values are errors.  The
    optional overrides dict (already-typed values, e.g. from CLI flags) is
    applied on top.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser = SCHEMA[key][0]
        try:
            raw[key] = parser(value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    if overrides:
        for key, value in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown override key {key!r}")
            if value is not None:
                raw[key] = value
    missing = [k for k in ("scenario", "T") if k not in raw]
    if missing:
        required = "scenario, T, and V0/D (or sweep_d for sweeps)"
        raise ConfigError(f"missing required keys: {', '.join(missing)} (required: {required})")
    return RunConfig(**raw)


def build_config(preset: str | None = None, config_text: str | None = None,
                 env: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge preset < config file < environment < explicit overrides."""
    merged: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r}; available: {', '.join(sorted(PRESETS))}"
            )
        merged.update(PRESETS[preset])
    if config_text is not None:
        cfg_over = dict(merged)
        # parse the file on its own to get typed values, then merge
        for lineno, line in enumerate(config_text.splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, _, value = body.partition("=")
            key, value = key.strip(), value.strip()
            if key not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            cfg_over[key] = SCHEMA[key][0](value)
        merged = cfg_over
    if env:
        for key in SCHEMA:
            env_key = f"PAIRWELL_{key.upper()}"
            if env_key in env:
                merged[key] = SCHEMA[key][0](env[env_key])
    if overrides:
        for key, value in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown override key {key!r}")
            if value is not None:
                merged[key] = value
    return RunConfig(**merged)


# Box lengths commensurate with the laser (omega * L = 2*pi*n).  The decay
# physics needs the momentum lattice dense enough that many sea modes fall
# within the decay linewidth; n = 24 puts the mode-recurrence time past the
# ground-state saturation time for these rates.
def _laser_box(n_cycles: int, omega: float = 0.45) -> float:
    return 2.0 * math.pi * n_cycles / omega


# Presets for the standard parameter sets: the two ground-state wells tuned
# to E_g = -0.4 (wide D=3.2 / narrow D=2.443), a small-box variant for the
# positron spectra, the two-bound-state well, the two supercritical wells
# with the quasibound state at -1.1, and the fixed-E_g width sweep.
PRESETS: dict[str, dict] = {
    # decay-rate runs: the box is sized so the created positron cannot wrap
    # around and coherently undo the creation inside the fit window
    # (recurrence time L/v with v ~ 0.64 at the resonant sea momentum)
    "perturbative-narrow": dict(
        scenario="perturbative", method="adjoint", V0=1.900, D=2.443, W=0.3,
        omega=0.45, E0=0.3, T=1300.0, L=_laser_box(48), N=4096,
        p_max=2.5, sample_every=25.0,
    ),
    "perturbative-wide": dict(
        scenario="perturbative", method="adjoint", V0=1.726, D=3.2, W=0.3,
        omega=0.45, E0=0.3, T=2300.0, L=_laser_box(96), N=8192,
        p_max=2.5, sample_every=40.0,
    ),
    # ground-state saturation needs the recurrence time past ~3 decay times
    "perturbative-saturation": dict(
        scenario="perturbative", method="adjoint", V0=1.900, D=2.443, W=0.3,
        omega=0.45, E0=0.3, T=3300.0, L=_laser_box(192), N=16384,
        p_max=2.5, sample_every=150.0,
    ),
    # late-time linear continuum growth: batch pipeline; the plateau is cut
    # so the late-third slope window spans two box-recurrence periods and
    # the bound-state recurrence wiggle integrates out of the fit
    "perturbative-slopes": dict(
        scenario="perturbative", method="batch", V0=1.900, D=2.443, W=0.3,
        omega=0.45, E0=0.3, T=3144.0, L=_laser_box(24), N=2048,
        p_max=1.5, evolve_positive=False, sample_every=2.5, snapshot_every=25.0,
    ),
    "perturbative-spectra": dict(
        scenario="perturbative", method="batch", V0=1.900, D=2.443, W=0.3,
        omega=0.45, E0=0.3, T=600.0, L=_laser_box(6), N=512,
        p_max=4.0, evolve_positive=True, sample_every=2.0, snapshot_every=75.0,
    ),
    "two-state": dict(
        scenario="two-state", method="adjoint", V0=1.584, D=4.5, W=0.3,
        omega=0.45, E0=0.3, T=3000.0, L=_laser_box(48), N=4096,
        p_max=2.5, sample_every=30.0,
    ),
    "supercritical-wide": dict(
        scenario="supercritical", V0=2.383, D=4.0, W=0.3,
        L=320.0, N=2048, p_max=2.0, T=282.0, dT=10.0,
        sample_every=2.0, turnoff_every=3.0,
    ),
    "supercritical-narrow": dict(
        scenario="supercritical", V0=2.522, D=3.2, W=0.3,
        L=320.0, N=2048, p_max=2.0, T=282.0, dT=10.0,
        sample_every=2.0, turnoff_every=3.0,
    ),
    "sweep-default": dict(
        scenario="sweep", sweep_d=[2.0, 2.2, 2.443, 2.8, 3.2],
        e_target=-0.4, W=0.3, omega=0.45, E0=0.3,
        L=_laser_box(48), N=4096, p_max=2.5,
        T=1300.0, d_stop=0.5, sample_every=25.0,
    ),
}
