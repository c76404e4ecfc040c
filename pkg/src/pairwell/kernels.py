"""Hot inner-loop kernels for the split-operator step.

Two implementations are provided for each kernel: a numba @njit version and
a pure-numpy fallback.  Selection happens once at import time:

* ``PAIRWELL_KERNELS=numpy``  forces the numpy path,
* ``PAIRWELL_KERNELS=numba``  requires numba (ImportError if missing),
* unset or ``auto``           uses numba when importable, numpy otherwise.

Both paths compute the same straight-line arithmetic and agree to rounding
(about one ulp; LLVM may contract multiply-adds).  The selected backend is
recorded in every run manifest, and reproducibility guarantees always refer
to a fixed backend.  The FFTs that surround these kernels are not jitted;
pocketfft already runs at memory bandwidth.

All kernels act in place on a batch of two-component spinor fields stored
as a complex128 array of shape (M, 2, N): M states, spinor component,
N grid (or momentum) points.
"""

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None
    HAVE_NUMBA = False

_choice = os.environ.get("PAIRWELL_KERNELS", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"PAIRWELL_KERNELS must be auto|numba|numpy, got {_choice!r}")
if _choice == "numba" and not HAVE_NUMBA:
    raise ImportError("PAIRWELL_KERNELS=numba but numba is not importable")
USE_NUMBA = HAVE_NUMBA and _choice != "numpy"


# ---------------------------------------------------------------------------
# pure-numpy reference implementations
# ---------------------------------------------------------------------------

def apply_kinetic_numpy(psi_k: np.ndarray, cos_e: np.ndarray, sin_red: np.ndarray,
                        p: np.ndarray) -> None:
    """Exact free-Dirac factor exp(-i*(sigma1*p + sigma3)*dt) per momentum mode.

    cos_e = cos(E_p*dt) and sin_red = sin(E_p*dt)/E_p are precomputed tables
    over the momentum lattice.  In-place on psi_k (momentum representation).
    """
    u = psi_k[:, 0, :]
    v = psi_k[:, 1, :]
    new_u = (cos_e - 1j * sin_red) * u - (1j * sin_red * p) * v
    new_v = -(1j * sin_red * p) * u + (cos_e + 1j * sin_red) * v
    psi_k[:, 0, :] = new_u
    psi_k[:, 1, :] = new_v


def apply_potential_numpy(psi_x: np.ndarray, phase: np.ndarray, cos_b: np.ndarray,
                          sin_b: np.ndarray) -> None:
    """Exact potential factor exp(-i*(a*I + b*sigma2)*dt) per grid point.

    phase = exp(-i*a*dt) (scalar potential), cos_b = cos(b*dt) and
    sin_b = sin(b*dt) (laser sigma2 coupling).  In-place on psi_x
    (position representation).
    """
    u = psi_x[:, 0, :]
    v = psi_x[:, 1, :]
    new_u = phase * (cos_b * u - sin_b * v)
    new_v = phase * (sin_b * u + cos_b * v)
    psi_x[:, 0, :] = new_u
    psi_x[:, 1, :] = new_v


# ---------------------------------------------------------------------------
# numba kernels (same arithmetic, fused loops, no temporaries)
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def apply_kinetic_numba(psi_k, cos_e, sin_red, p):
        M = psi_k.shape[0]
        N = psi_k.shape[2]
        for m in range(M):
            for j in range(N):
                c = cos_e[j]
                s = sin_red[j]
                sp = s * p[j]
                u = psi_k[m, 0, j]
                v = psi_k[m, 1, j]
                psi_k[m, 0, j] = (c - 1j * s) * u - (1j * sp) * v
                psi_k[m, 1, j] = -(1j * sp) * u + (c + 1j * s) * v

    @numba.njit(cache=True)
    def apply_potential_numba(psi_x, phase, cos_b, sin_b):
        M = psi_x.shape[0]
        N = psi_x.shape[2]
        for m in range(M):
            for j in range(N):
                ph = phase[j]
                cb = cos_b[j]
                sb = sin_b[j]
                u = psi_x[m, 0, j]
                v = psi_x[m, 1, j]
                psi_x[m, 0, j] = ph * (cb * u - sb * v)
                psi_x[m, 1, j] = ph * (sb * u + cb * v)

else:  # pragma: no cover
    apply_kinetic_numba = None
    apply_potential_numba = None


if USE_NUMBA:
    apply_kinetic = apply_kinetic_numba
    apply_potential = apply_potential_numba
else:
    apply_kinetic = apply_kinetic_numpy
    apply_potential = apply_potential_numpy


def backend_name() -> str:
    """Kernel backend selected at import ('numba' or 'numpy')."""
    return "numba" if USE_NUMBA else "numpy"
