"""Split-operator time evolution of two-component spinor fields.

One step of size dt applies the Strang-split unitary

    U(t, dt) = exp(-i V dt/2) exp(-i T dt) exp(-i V dt/2)

with both factors exact: the kinetic factor exp(-i (sigma1 p + sigma3) dt)
is diagonal per momentum mode, the potential factor
exp(-i (a I + b sigma2) dt) diagonal per grid point, where a = well
potential energy and b = -q A_y is the laser coupling.  V is evaluated at
the step midpoint t + dt/2, giving second-order global accuracy for
time-dependent fields while every factor stays unitary for any dt.

Checkpoint files (External Interface)
-------------------------------------
``write_checkpoint`` stores a batch of states at one time in a binary
little-endian block format:

    magic   8 bytes  b"PWSNAP1\\0"
    L       float64  box length
    N       int64    grid points
    M       int64    number of states
    t       float64  snapshot time
    data    M * 2 * N complex128, C order (state, spinor component, grid)
"""

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from . import kernels
from .errors import ConfigError, ConvergenceError
from .fields import FieldConfig, envelope, laser_vector_potential, well_profile
from .units import ELECTRON_CHARGE, Grid, free_energy

_CHECKPOINT_MAGIC = b"PWSNAP1\x00"


@dataclass(frozen=True)
class SpinorField:
    """A single normalized two-component field on the grid."""

    psi: np.ndarray  # (2, N) complex
    grid: Grid

    @property
    def norm(self) -> float:
        return self.grid.norm(self.psi)


@dataclass(frozen=True)
class Schedule:
    """Uniform time stepping from t_start to t_end.

    dt is adjusted minimally so an integer number of steps lands exactly on
    t_end; sample_stride marks the steps at which observers fire.
    """

    t_start: float
    t_end: float
    dt: float
    n_steps: int = field(init=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError(f"time step must be positive, got dt={self.dt}")
        span = self.t_end - self.t_start
        if span <= 0:
            raise ConfigError(f"empty schedule: [{self.t_start}, {self.t_end}]")
        n = max(1, int(round(span / self.dt)))
        object.__setattr__(self, "n_steps", n)
        object.__setattr__(self, "dt", span / n)

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


class SplitOperatorPropagator:
    """Evolves batches of spinor fields under one field configuration.

    Kinetic-factor tables are precomputed per (grid, dt); the potential
    factor is rebuilt each step from the envelope and, when the laser is
    on, the traveling-wave coupling at the step midpoint.
    """

    def __init__(self, grid: Grid, cfg: FieldConfig, dt: float):
        self.grid = grid
        self.cfg = cfg
        self.dt = float(dt)
        self._profile = well_profile(grid.x, cfg)
        self._set_kinetic_tables(self.dt)

    def _set_kinetic_tables(self, dt: float):
        E = free_energy(self.grid.p)
        self._cos_e = np.cos(E * dt)
        self._sin_red = np.sin(E * dt) / E
        self._dt_tab = dt

    def step(self, psi: np.ndarray, t: float, dt: float | None = None) -> np.ndarray:
        """Advance a batch (M, 2, N) or single state (2, N) from t to t + dt.

        In place on contiguous complex128 batches; returns the array.
        Negative dt steps backwards (the exact inverse of the forward step
        from t + dt).
        """
        single = psi.ndim == 2
        if single:
            psi = psi[None]
        if dt is None:
            dt = self.dt
        if dt != self._dt_tab:
            self._set_kinetic_tables(dt)
        half = 0.5 * dt
        t_mid = t + 0.5 * dt
        a = self._profile * envelope(t_mid, self.cfg)
        phase = np.exp(-1j * a * half)
        if self.cfg.laser_on:
            b = -ELECTRON_CHARGE * laser_vector_potential(self.grid.x, t_mid, self.cfg)
            cos_b = np.cos(b * half)
            sin_b = np.sin(b * half)
        else:
            cos_b = np.ones(self.grid.N)
            sin_b = np.zeros(self.grid.N)

        kernels.apply_potential(psi, phase, cos_b, sin_b)
        psi_k = scipy.fft.fft(psi, axis=-1)
        kernels.apply_kinetic(psi_k, self._cos_e, self._sin_red, self.grid.p)
        psi[...] = scipy.fft.ifft(psi_k, axis=-1)
        kernels.apply_potential(psi, phase, cos_b, sin_b)
        return psi[0] if single else psi


def evolve(initial: np.ndarray, schedule: Schedule, cfg: FieldConfig, grid: Grid,
           observer=None, snapshot_steps=None, norm_check_stride: int = 200):
    """Evolve a batch of states over a schedule.

    Parameters
    ----------
    initial : (M, 2, N) complex array of orthonormal states (copied).
    observer : optional callable (step_index, t, psi_batch) invoked at step 0
        and after every step; must not mutate the batch.
    snapshot_steps : optional iterable of step indices whose states are
        returned as copies, keyed by index (0 = initial time).

    Returns
    -------
    (final_batch, snapshots) where snapshots maps step index -> (M, 2, N).

    Raises ConvergenceError when the batch norm drifts by more than 1e-8
    (the factors are unitary, so drift signals a non-finite blow-up).
    """
    psi = np.array(initial, dtype=complex, order="C")
    if psi.ndim == 2:
        psi = psi[None]
    prop = SplitOperatorPropagator(grid, cfg, schedule.dt)
    wanted = set(int(s) for s in snapshot_steps) if snapshot_steps is not None else set()
    snapshots = {}
    norm0 = np.sqrt(np.sum(np.abs(psi) ** 2, axis=(1, 2)) * grid.dx)
    if np.max(np.abs(norm0 - 1.0)) > 1e-8:
        raise ConfigError("evolve expects normalized initial states")

    times = schedule.times()
    if observer is not None:
        observer(0, times[0], psi)
    if 0 in wanted:
        snapshots[0] = psi.copy()
    for i in range(schedule.n_steps):
        prop.step(psi, times[i])
        step_no = i + 1
        if step_no % norm_check_stride == 0 or step_no == schedule.n_steps:
            norms = np.sqrt(np.sum(np.abs(psi) ** 2, axis=(1, 2)) * grid.dx)
            drift = float(np.max(np.abs(norms - 1.0)))
            if not np.isfinite(drift) or drift > 1e-8:
                raise ConvergenceError(
                    f"norm drift {drift:.3e} at step {step_no} (t={times[step_no]:.3f}); "
                    "reduce dt"
                )
        if observer is not None:
            observer(step_no, times[step_no], psi)
        if step_no in wanted:
            snapshots[step_no] = psi.copy()
    return psi, snapshots


def richardson_ratio(initial: np.ndarray, cfg: FieldConfig, grid: Grid,
                     t_start: float, horizon: float, dt: float) -> float:
    """Step-halving convergence ratio over a short horizon.

    Evolves the same states with dt, dt/2 and dt/4; returns
    ||psi_dt - psi_dt/2|| / ||psi_dt/2 - psi_dt/4||, which is ~4 for a
    second-order splitting.
    """
    finals = []
    for f in (1.0, 0.5, 0.25):
        sched = Schedule(t_start=t_start, t_end=t_start + horizon, dt=dt * f)
        out, _ = evolve(initial, sched, cfg, grid)
        finals.append(out)
    e1 = np.sqrt(np.sum(np.abs(finals[0] - finals[1]) ** 2) * grid.dx)
    e2 = np.sqrt(np.sum(np.abs(finals[1] - finals[2]) ** 2) * grid.dx)
    if e2 == 0.0:
        raise ConvergenceError("Richardson check degenerate: refinement error is zero")
    return float(e1 / e2)


def calibrate_dt(initial: np.ndarray, cfg: FieldConfig, grid: Grid, t_start: float,
                 dt: float, horizon: float = 10.0, max_halvings: int = 6) -> tuple[float, float]:
    """Halve dt until the Richardson ratio lands in [3, 5].

    Returns (dt, ratio).  Raises ConvergenceError when the ratio never
    settles (non-smooth fields or a rounding-dominated probe).
    """
    for _ in range(max_halvings + 1):
        ratio = richardson_ratio(initial, cfg, grid, t_start, horizon, dt)
        if 3.0 <= ratio <= 5.0:
            return dt, ratio
        dt *= 0.5
    raise ConvergenceError(
        f"time step calibration failed: last ratio {ratio:.2f} outside [3, 5]"
    )


def write_checkpoint(path, grid: Grid, t: float, psi: np.ndarray) -> None:
    """Write one snapshot batch in the documented binary block format."""
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if psi.ndim == 2:
        psi = psi[None]
    M = psi.shape[0]
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<dqqd", grid.L, grid.N, M, t))
        fh.write(psi.astype("<c16").tobytes(order="C"))


def read_checkpoint(path) -> tuple[Grid, float, np.ndarray]:
    """Read a checkpoint written by write_checkpoint."""
    from .units import make_grid

    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CHECKPOINT_MAGIC:
            raise ConfigError(f"not a checkpoint file: bad magic {magic!r}")
        L, N, M, t = struct.unpack("<dqqd", fh.read(32))
        data = np.frombuffer(fh.read(), dtype="<c16").reshape(int(M), 2, int(N))
    return make_grid(L, int(N)), t, data.astype(np.complex128)
