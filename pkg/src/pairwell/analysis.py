"""Post-processing of observable time series and spectra.

Decay probabilities and their exponential-rate fits, late-time linear
slopes, spectral peak widths (FWHM), and the decay-rate-versus-bound-state-
width regression used by the well-family sweep.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError, InvariantError


@dataclass(frozen=True)
class TimeSeries:
    """Sampled scalar observable with strictly increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ConfigError("times and values must be matching 1-d arrays")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ConfigError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.times)

    def restrict(self, t_min: float = -np.inf, t_max: float = np.inf) -> "TimeSeries":
        m = (self.times >= t_min) & (self.times <= t_max)
        return TimeSeries(self.times[m], self.values[m])


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential-decay fit of a probability series."""

    gamma: float
    residual: float       # rms of the log-linear fit residuals
    r_squared: float
    window: tuple[float, float]
    n_points: int


def decay_probability(series: TimeSeries, saturation: int) -> TimeSeries:
    """Decay probability d(T) = |saturation - value(T)|.

    saturation is the particle number the creation channel saturates at:
    1 when a single state mediates the decay, 2 when two bound states fill.
    """
    if saturation not in (1, 2):
        raise ConfigError(f"saturation must be 1 or 2, got {saturation}")
    return TimeSeries(series.times, np.abs(float(saturation) - series.values))


def fit_decay_rate(
    d: TimeSeries,
    d_window: tuple[float, float] = (0.05, 0.8),
    t_min: float = 0.0,
    min_points: int = 10,
) -> DecayFit:
    """Fit ln d(T) = const - Gamma*T over the window where d is clean.

    The window keeps samples with d inside d_window (default [0.05, 0.8],
    excluding ramp transients near d ~ 1 and the saturated tail) and
    t >= t_min (past the turn-on ramp).
    """
    lo, hi = d_window
    m = (d.times >= t_min) & (d.values >= lo) & (d.values <= hi) & (d.values > 0)
    if int(np.sum(m)) < min_points:
        raise ConvergenceError(
            f"decay fit window holds {int(np.sum(m))} samples (< {min_points})"
        )
    t = d.times[m]
    y = np.log(d.values[m])
    slope, intercept = np.polyfit(t, y, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(
        gamma=float(-slope),
        residual=float(np.sqrt(ss_res / len(t))),
        r_squared=r2,
        window=(float(t[0]), float(t[-1])),
        n_points=int(len(t)),
    )


def late_slope(series: TimeSeries, fraction: float = 1.0 / 3.0) -> float:
    """Least-squares slope over the final `fraction` of the series."""
    n = len(series)
    if n < 4:
        raise ConvergenceError(f"series of {n} samples is too short for a slope fit")
    start = min(n - 2, int(np.floor(n * (1.0 - fraction))))
    t = series.times[start:]
    v = series.values[start:]
    return float(np.polyfit(t, v, 1)[0])


def fwhm(energies: np.ndarray, values: np.ndarray) -> float:
    """Full width at half maximum of a single-peaked sampled curve.

    Half-height crossings on each side of the peak are located by linear
    interpolation; raises when either side never drops below half height.
    """
    e = np.asarray(energies, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(e) < 3:
        raise InvariantError("fwhm needs at least 3 samples")
    ipk = int(np.argmax(v))
    half = v[ipk] / 2.0
    if v[ipk] <= 0:
        raise InvariantError("fwhm of a non-positive spectrum")

    left = None
    for i in range(ipk, 0, -1):
        if v[i - 1] < half <= v[i]:
            frac = (half - v[i - 1]) / (v[i] - v[i - 1])
            left = e[i - 1] + frac * (e[i] - e[i - 1])
            break
    right = None
    for i in range(ipk, len(v) - 1):
        if v[i + 1] < half <= v[i]:
            frac = (v[i] - half) / (v[i] - v[i + 1])
            right = e[i] + frac * (e[i + 1] - e[i])
            break
    if left is None or right is None:
        raise InvariantError("fwhm: no half-height crossing on one side of the peak")
    return float(right - left)


@dataclass(frozen=True)
class SweepRow:
    """One tuned well of the fixed-ground-state-energy family."""

    D: float
    V0: float
    W: float
    E_g: float
    W_b: float
    gamma: float
    fit_window: tuple[float, float]
    fit_residual: float
    fit_r_squared: float
    in_resonance_window: bool
    failed: bool = False
    note: str = ""


# ground-state widths where a laser photon bridges the two lowest gap
# states, so the single-state decay picture breaks down
RESONANCE_WIDTH_WINDOW = (2.062, 2.197)


@dataclass(frozen=True)
class SweepSummary:
    """Log-linear regression Gamma ~ exp(-C * W_b) over clean sweep rows."""

    C: float
    lnA: float
    r_squared: float
    n_used: int
    excluded: list


def summarize_sweep(rows: list[SweepRow]) -> SweepSummary:
    """Regress ln Gamma on W_b over rows outside the resonance window."""
    rows = sorted(rows, key=lambda r: r.W_b)
    used = [r for r in rows if not r.failed and not r.in_resonance_window]
    excluded = [r.D for r in rows if r.failed or r.in_resonance_window]
    if len(used) < 2:
        raise ConvergenceError(f"sweep regression needs >= 2 clean rows, got {len(used)}")
    wb = np.array([r.W_b for r in used])
    lng = np.log(np.array([r.gamma for r in used]))
    slope, intercept = np.polyfit(wb, lng, 1)
    pred = slope * wb + intercept
    ss_res = float(np.sum((lng - pred) ** 2))
    ss_tot = float(np.sum((lng - np.mean(lng)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return SweepSummary(
        C=float(-slope), lnA=float(intercept), r_squared=r2,
        n_used=len(used), excluded=excluded,
    )
