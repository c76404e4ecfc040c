"""Static (plateau-time) Dirac Hamiltonian: spectrum, bound states, tuning.

The one-dimensional two-component reduction of the Dirac Hamiltonian is

    H = sigma1 * p + sigma3 + V(x)                (natural units)

with V(x) the electron potential energy of the binding well at full
envelope strength (the laser never enters the static problem).  The
derivative is realized spectrally, so for V = 0 the eigenvalues are the
exact lattice dispersions +-sqrt(1 + p_k^2) and no fermion doubling occurs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, ConvergenceError, InvariantError
from .fields import FieldConfig, well_profile
from .units import Grid, make_grid

GAP_EDGE_EPS = 1e-6


def build_static_hamiltonian(grid: Grid, cfg: FieldConfig) -> np.ndarray:
    """Dense Hermitian 2N x 2N Hamiltonian in the position representation.

    Component layout: index s*N + j for spinor component s in {0, 1} and
    grid point j.  The sigma1*p block is built as F^-1 diag(p) F with the
    unitary DFT, then symmetrized so Hermiticity is exact to rounding.
    """
    N = grid.N
    # spectral derivative: K = F^-1 diag(p) F, exact on the lattice
    K = np.fft.ifft(grid.p[:, None] * np.fft.fft(np.eye(N), axis=0), axis=0)
    K = 0.5 * (K + K.conj().T)
    V = well_profile(grid.x, cfg)
    H = np.zeros((2 * N, 2 * N), dtype=complex)
    H[:N, :N] = np.diag(1.0 + V)
    H[N:, N:] = np.diag(-1.0 + V)
    H[:N, N:] = K
    H[N:, :N] = K
    return H


@dataclass(frozen=True)
class StaticSpectrum:
    """Full eigensystem of the plateau Hamiltonian.

    energies: ascending eigenvalues (length 2N).
    states:   eigenvectors as shape (2N, 2, N), orthonormal under the grid
              inner product (dx-weighted).
    classes:  one of 'negative', 'gap', 'positive' per eigenpair, split at
              the mass-gap edges -1 and +1.
    widths:   rms spatial width 2*sqrt(<x^2>-<x>^2) per state.
    p_in:     probability inside |x| < D/2 + 2W per state.
    """

    grid: Grid
    cfg: FieldConfig
    energies: np.ndarray
    states: np.ndarray
    classes: np.ndarray
    widths: np.ndarray
    p_in: np.ndarray

    @property
    def gap_indices(self) -> np.ndarray:
        return np.nonzero(self.classes == "gap")[0]

    def ground_state(self) -> "BoundState":
        """Lowest-energy gap state; raises if the gap is empty."""
        states = bound_states(self)
        if not states:
            raise InvariantError("no bound state in the mass gap for this configuration")
        return states[0]


@dataclass(frozen=True)
class BoundState:
    """A single gap eigenstate with its energy and spatial width."""

    energy: float
    psi: np.ndarray  # (2, N), dx-normalized
    width: float
    index: int


def compute_spectrum(grid: Grid, cfg: FieldConfig) -> StaticSpectrum:
    """Diagonalize the static Hamiltonian and classify all 2N eigenpairs."""
    H = build_static_hamiltonian(grid, cfg)
    energies, vecs = scipy.linalg.eigh(H)
    # repack (2N, 2N) eigenvector columns as (2N, 2, N) dx-normalized states
    states = vecs.T.reshape(2 * grid.N, 2, grid.N) / np.sqrt(grid.dx)
    classes = np.where(
        energies < -1.0 + GAP_EDGE_EPS,
        "negative",
        np.where(energies > 1.0 - GAP_EDGE_EPS, "positive", "gap"),
    )
    dens = np.sum(np.abs(states) ** 2, axis=1) * grid.dx  # (2N, N), sums to 1
    mean_x = dens @ grid.x
    mean_x2 = dens @ grid.x**2
    widths = 2.0 * np.sqrt(np.maximum(mean_x2 - mean_x**2, 0.0))
    inside = np.abs(grid.x) < cfg.D / 2.0 + 2.0 * cfg.W
    p_in = dens[:, inside].sum(axis=1)
    return StaticSpectrum(
        grid=grid, cfg=cfg, energies=energies, states=states,
        classes=classes, widths=widths, p_in=p_in,
    )


def gap_energies(grid: Grid, cfg: FieldConfig) -> np.ndarray:
    """Eigenvalues strictly inside the mass gap, without eigenvectors.

    Much cheaper than compute_spectrum; used by the depth tuner.
    """
    H = build_static_hamiltonian(grid, cfg)
    return scipy.linalg.eigvalsh(
        H, subset_by_value=(-1.0 + GAP_EDGE_EPS, 1.0 - GAP_EDGE_EPS)
    )


def gap_eigenpairs(grid: Grid, cfg: FieldConfig,
                   p_cut: float | None = 8.0) -> list[BoundState]:
    """Bound states only, at a fraction of the full-spectrum cost.

    With p_cut set, the Hamiltonian is projected onto the plane-wave
    subspace |p| <= p_cut before diagonalizing: gap states carry momentum
    content falling off exponentially (their spatial width is of order
    1 lambda_C or more), so the truncation error is far below 1e-8 for
    p_cut = 8 while the matrix shrinks from (2N)^2 to (2M)^2.  p_cut=None
    falls back to a subset eigensolve of the dense position-space matrix.
    """
    if p_cut is None or 2 * np.sum(np.abs(grid.p) <= p_cut) >= grid.N:
        H = build_static_hamiltonian(grid, cfg)
        energies, vecs = scipy.linalg.eigh(
            H, subset_by_value=(-1.0 + GAP_EDGE_EPS, 1.0 - GAP_EDGE_EPS)
        )
        states = [vecs[:, i].reshape(2, grid.N) / np.sqrt(grid.dx)
                  for i in range(vecs.shape[1])]
    else:
        energies, states = _gap_eigenpairs_restricted(grid, cfg, p_cut)
    out = []
    for i, e in enumerate(energies):
        psi = states[i]
        out.append(BoundState(
            energy=float(e), psi=psi, width=state_width(psi, grid), index=i,
        ))
    return out


def _gap_eigenpairs_restricted(grid: Grid, cfg: FieldConfig, p_cut: float):
    """Diagonalize P H P on the |p| <= p_cut plane-wave subspace.

    In the plane-wave basis the kinetic term is the block-diagonal
    sigma1*p_k + sigma3 and the well couples modes k -> k' through its
    lattice Fourier coefficients, <k|V|k'> = (-1)^m IFFT[V]_m with
    m = (k'-k) mod N (the sign is the phase of the -L/2 grid offset).
    """
    N = grid.N
    ks = np.nonzero(np.abs(grid.p) <= p_cut)[0]
    ks = ks[np.argsort(grid.p[ks], kind="stable")]
    M = len(ks)
    V = well_profile(grid.x, cfg)
    C = np.fft.ifft(V)
    m = (ks[None, :] - ks[:, None]) % N
    Vmat = np.where(m % 2 == 0, 1.0, -1.0) * C[m]
    Vmat = 0.5 * (Vmat + Vmat.conj().T)

    H = np.zeros((2 * M, 2 * M), dtype=complex)
    H[:M, :M] = Vmat + np.diag(1.0 + np.zeros(M))
    H[M:, M:] = Vmat - np.diag(1.0 + np.zeros(M))
    p = grid.p[ks]
    H[:M, M:] = np.diag(p)
    H[M:, :M] = np.diag(p)
    energies, vecs = scipy.linalg.eigh(
        H, subset_by_value=(-1.0 + GAP_EDGE_EPS, 1.0 - GAP_EDGE_EPS)
    )
    # synthesize position-space states; the plane waves are dx-orthonormal,
    # so unit mode-coefficient vectors give dx-normalized states
    waves = np.exp(1j * np.outer(p, grid.x)) / np.sqrt(grid.L)  # (M, N grid)
    states = [np.stack([vecs[:M, i] @ waves, vecs[M:, i] @ waves])
              for i in range(vecs.shape[1])]
    return energies, states


def bound_states(spec: StaticSpectrum) -> list[BoundState]:
    """All gap eigenpairs, sorted ascending in energy, widths attached."""
    out = []
    for i in spec.gap_indices:
        out.append(
            BoundState(
                energy=float(spec.energies[i]),
                psi=spec.states[i],
                width=float(spec.widths[i]),
                index=int(i),
            )
        )
    return out


def state_width(psi: np.ndarray, grid: Grid) -> float:
    """Rms width 2*sqrt(<x^2> - <x>^2) of a normalized two-component state."""
    dens = np.sum(np.abs(psi) ** 2, axis=0) * grid.dx
    total = dens.sum()
    if abs(total - 1.0) > 1e-6:
        raise InvariantError(f"state_width needs a normalized state, norm^2={total:.8f}")
    mean_x = dens @ grid.x
    mean_x2 = dens @ grid.x**2
    return float(2.0 * np.sqrt(max(mean_x2 - mean_x**2, 0.0)))


def _tune_objective(v0: float, D: float, W: float, grid: Grid, mode: str) -> float:
    cfg = FieldConfig(V0=v0, D=D, W=W)
    gap = gap_energies(grid, cfg)
    if mode == "ground":
        # no gap state yet: report the upper gap edge so the walk deepens
        return float(gap[0]) if len(gap) else 1.0
    if mode == "splitting":
        # fewer than two states: report a negative splitting, again on the
        # shallow side of the increasing objective
        return float(gap[1] - gap[0]) if len(gap) >= 2 else -1.0
    raise ConfigError(f"unknown tuning mode {mode!r}")


def tune_well_depth(
    D: float,
    W: float,
    target: float,
    grid: Grid,
    mode: str = "ground",
    bracket: tuple[float, float] = (0.05, 3.0),
    tol: float = 1e-4,
    max_iter: int = 80,
    walk_step: float = 0.2,
) -> float:
    """Bisection on the well depth V0 until a spectral target is met.

    mode='ground':    ground-state energy E_g(V0) == target (target in (-1, 1)).
    mode='splitting': E_1 - E_0 == target.

    The bracket is found by walking V0 upward from bracket[0] in steps of
    walk_step; along the walk the objective must be strictly monotone
    (deepening the well lowers E_g and widens the splitting).  A monotonicity
    break means the tracked branch was lost (typically the ground state
    diving below the gap at the critical depth) and stops the search.
    Raises ConvergenceError when no bracket straddles the target.
    """
    if mode == "ground" and not (-1.0 < target < 1.0):
        raise ConfigError(f"ground-state target must lie in the gap, got {target}")
    v_lo, v_hi = bracket
    f_prev = _tune_objective(v_lo, D, W, grid, mode)
    sign = -1.0 if mode == "ground" else 1.0  # direction of d(objective)/dV0
    if sign * (f_prev - target) > 0:
        raise ConvergenceError(
            f"objective already past target at V0={v_lo}: {f_prev:.4f} vs {target}"
        )
    v_prev, v = v_lo, v_lo
    pair = None
    while v < v_hi:
        v = min(v + walk_step, v_hi)
        f = _tune_objective(v, D, W, grid, mode)
        if sign * (f - f_prev) <= 0:
            raise ConvergenceError(
                f"objective not monotone at V0={v:.4f} (branch lost before target {target})"
            )
        if sign * (f - target) >= 0:
            pair = (v_prev, v)
            break
        v_prev, f_prev = v, f
    if pair is None:
        raise ConvergenceError(
            f"target {target} not reachable for D={D}: "
            f"objective only reaches {f_prev:.4f} within V0 <= {v_hi}"
        )
    lo, hi = pair
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = _tune_objective(mid, D, W, grid, mode)
        if abs(f_mid - target) < tol:
            return mid
        if sign * (f_mid - target) < 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection did not reach |objective - target| < {tol} in {max_iter} steps"
    )


def embed_state(psi: np.ndarray, small: Grid, big: Grid) -> np.ndarray:
    """Place a localized state from a small box into a larger commensurate box.

    Requires equal lattice spacing and an integer centering offset; the
    state must have decayed below rounding at the small-box edge (true for
    any gap state, whose tails fall like exp(-sqrt(1-E^2)|x|)), so the
    embedding is exact to machine precision.
    """
    if abs(small.dx - big.dx) > 1e-12 * big.dx:
        raise ConfigError(
            f"grids not commensurate: dx {small.dx} vs {big.dx}"
        )
    offset = (big.N - small.N) // 2
    if 2 * offset + small.N != big.N:
        raise ConfigError("embedding needs an integer centering offset")
    # the eigensolver rounding floor (~1e-8 amplitude) sets the practical
    # edge level of a decayed state
    edge = float(np.max(np.sum(np.abs(psi[:, [0, -1]]) ** 2, axis=0)))
    if edge > 1e-12:
        raise InvariantError(
            f"state has not decayed at the small-box edge (density {edge:.2e})"
        )
    out = np.zeros((2, big.N), dtype=complex)
    out[:, offset:offset + small.N] = psi
    return out


def gap_states_on(grid: Grid, cfg: FieldConfig, n_states: int | None = None,
                  min_n: int = 512, min_l_factor: float = 10.0) -> list[BoundState]:
    """Gap eigenpairs on `grid`, solved on the smallest commensurate subgrid.

    Gap states are localized at the well, so they can be diagonalized
    densely on a divisor grid (same dx, box >= min_l_factor*(D+2W), at
    least min_n points) and embedded.  Only the lowest n_states are
    returned (all when None); a subgrid is rejected when any requested
    state has not decayed at its edge (weakly bound levels near the gap
    edge need a larger box), falling back to the full grid last.
    """
    for k in range(grid.N // min_n, 1, -1):
        if grid.N % k:
            continue
        L_sub = grid.L / k
        if L_sub < min_l_factor * (cfg.D + 2.0 * cfg.W) + 4.0 * cfg.W:
            continue
        sub = make_grid(L_sub, grid.N // k)
        pairs = gap_eigenpairs(sub, cfg, p_cut=None)
        if n_states is not None:
            pairs = pairs[:n_states]
        try:
            return [
                BoundState(energy=b.energy, psi=embed_state(b.psi, sub, grid),
                           width=b.width, index=b.index)
                for b in pairs
            ]
        except InvariantError:
            continue
    pairs = gap_eigenpairs(grid, cfg, p_cut=None if grid.N <= 2048 else 8.0)
    return pairs if n_states is None else pairs[:n_states]


def locate_quasibound(spec: StaticSpectrum, cfg: FieldConfig) -> float:
    """Energy of the quasibound resonance embedded in the negative continuum.

    Supercritical wells (V0 > 2) push a former gap state below -1; among the
    negative-continuum eigenstates it shows up as the one with the largest
    probability inside the well region, P_in = integral over |x| < D/2 + 2W.
    """
    if cfg.V0 <= 2.0:
        raise ConfigError(
            f"quasibound search needs a supercritical well (V0 > 2), got V0={cfg.V0}"
        )
    # a state dived from the gap cannot sit below -1 - V0; the window also
    # excludes the spurious localized states the lattice band edge can bind
    neg = np.nonzero(
        (spec.classes == "negative") & (spec.energies >= -1.0 - cfg.V0)
    )[0]
    if len(neg) == 0:
        raise InvariantError("spectrum holds no negative-continuum states")
    best = neg[np.argmax(spec.p_in[neg])]
    return float(spec.energies[best])
