"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.  The heavy scenario runs are session fixtures shared
between criteria; the whole suite is sized for a two-core desktop and takes
on the order of an hour.

Decay rates are asserted as ratios and orderings only; their absolute
normalization depends on a time-axis convention that is not pinned down.
"""

import math

import numpy as np
import pytest

pytestmark = pytest.mark.acceptance

from pairwell.analysis import TimeSeries, decay_probability, fit_decay_rate, fwhm
from pairwell.config import PRESETS, RunConfig
from pairwell.errors import ConvergenceError
from pairwell.fields import FieldConfig
from pairwell.observables import (
    FreeBasis,
    mode_cutoff_indices,
    particle_number,
    transition_amplitudes,
)
from pairwell.propagator import Schedule, evolve, richardson_ratio
from pairwell.runner import run_scenario
from pairwell.spectrum import bound_states, compute_spectrum, tune_well_depth
from pairwell.units import make_grid

WORKERS = 2
DESK = make_grid(80.0, 512)
LASER_L6 = 2 * math.pi * 6 / 0.45


def _report(num: int, ok: bool, detail: str):
    line = f"ACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(f"\n{line}")
    assert ok, line


def _preset_cfg(name: str, out, **over) -> RunConfig:
    d = dict(PRESETS[name])
    d.update(workers=WORKERS, out=str(out))
    d.update(over)
    return RunConfig(**d)


# ---------------------------------------------------------------------------
# shared heavy runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def narrow_run(tmp_path_factory):
    cfg = _preset_cfg("perturbative-narrow", tmp_path_factory.mktemp("narrow"))
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def wide_run(tmp_path_factory):
    cfg = _preset_cfg("perturbative-wide", tmp_path_factory.mktemp("wide"))
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def spectra_run(tmp_path_factory):
    cfg = _preset_cfg("perturbative-spectra", tmp_path_factory.mktemp("spectra"))
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def saturation_run(tmp_path_factory):
    cfg = _preset_cfg("perturbative-saturation", tmp_path_factory.mktemp("sat"))
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def slopes_run(tmp_path_factory):
    cfg = _preset_cfg("perturbative-slopes", tmp_path_factory.mktemp("slopes"))
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def two_state_run(tmp_path_factory):
    cfg = _preset_cfg("two-state", tmp_path_factory.mktemp("two"))
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def sc_narrow_run(tmp_path_factory):
    cfg = _preset_cfg("supercritical-narrow", tmp_path_factory.mktemp("scn"))
    return run_scenario(cfg)


@pytest.fixture(scope="session")
def sc_wide_run(tmp_path_factory):
    cfg = _preset_cfg("supercritical-wide", tmp_path_factory.mktemp("scw"))
    return run_scenario(cfg)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_static_spectrum():
    """Both tuned wells hold a gap ground state at E_g = -0.40 +- 0.01."""
    energies = {}
    for V0, D in [(1.726, 3.200), (1.900, 2.443)]:
        spec = compute_spectrum(DESK, FieldConfig(V0=V0, D=D, W=0.3))
        energies[(V0, D)] = bound_states(spec)[0].energy
    ok = all(abs(e + 0.40) < 0.01 for e in energies.values())
    _report(1, ok, f"ground energies {({k: round(v, 4) for k, v in energies.items()})}")


def test_criterion_02_tuner():
    """Depth tuning reproduces the quoted parameter pairs to +-0.02.

    The two-bound-state well (D=4.5) is the member of the same
    E_g = -0.4 family whose lowest splitting sits at the laser frequency
    (0.404 vs omega = 0.45 with this exactly-solved well); tuning the
    family at D=4.5 reproduces the quoted depth.
    """
    results = {}
    for D, expect in [(3.200, 1.726), (2.443, 1.900), (4.500, 1.584)]:
        v0 = tune_well_depth(D, 0.3, -0.4, DESK, mode="ground")
        results[D] = (v0, expect)
    spec = compute_spectrum(DESK, FieldConfig(V0=results[4.5][0], D=4.5, W=0.3))
    gap = bound_states(spec)
    two_state_ok = len(gap) >= 2 and abs((gap[1].energy - gap[0].energy) - 0.45) < 0.06
    ok = all(abs(v - e) < 0.02 for v, e in results.values()) and two_state_ok
    detail = ", ".join(f"D={d}: V0={v:.4f} (want {e})" for d, (v, e) in results.items())
    _report(2, ok, detail)


def test_criterion_03_vacuum_null():
    """Adiabatic well only: N < 1e-3; free evolution: N < 1e-6."""
    basis = FreeBasis(DESK)
    sel = mode_cutoff_indices(DESK, 4.0)
    neg = basis.states(-1, sel)

    cfg = FieldConfig(V0=1.726, D=3.2, W=0.3, T=20.0, dT=10.0)
    sched = Schedule(t_start=-10.0, t_end=30.0, dt=0.05)
    out, _ = evolve(neg, sched, cfg, DESK)
    n_well = particle_number(transition_amplitudes(out, basis, 30.0, -1, sel))

    cfg0 = FieldConfig(V0=0.0, D=1.0, W=0.3, T=20.0, dT=10.0)
    out0, _ = evolve(neg[:32], sched, cfg0, DESK)
    n_free = particle_number(transition_amplitudes(out0, basis, 30.0, -1, sel[:32]))

    ok = n_well < 1e-3 and n_free < 1e-6
    _report(3, ok, f"ramped well N = {n_well:.2e} (< 1e-3); free N = {n_free:.2e} (< 1e-6)")


@pytest.fixture(scope="session")
def identity_runs(tmp_path_factory):
    """Short full-basis runs (no cutoff) for the bookkeeping identities."""
    runs = []
    pert = RunConfig(
        scenario="perturbative", method="batch", V0=1.9, D=2.443, W=0.3,
        omega=0.45, E0=0.3, L=LASER_L6, N=512, T=20.0, dT=27.925268031909273,
        p_max=None, evolve_positive=True, sample_every=4.0, snapshot_every=8.0,
        collect_amplitudes=True, workers=WORKERS,
        out=str(tmp_path_factory.mktemp("ident_p")),
    )
    runs.append(run_scenario(pert))
    sc = RunConfig(
        scenario="supercritical", V0=2.522, D=3.2, W=0.3,
        L=80.0, N=512, T=40.0, dT=10.0, p_max=None, evolve_positive=True,
        sample_every=4.0, snapshot_every=10.0, turnoff_every=10.0,
        collect_amplitudes=True, workers=WORKERS,
        out=str(tmp_path_factory.mktemp("ident_s")),
    )
    runs.append(run_scenario(sc))
    return runs


def test_criterion_04_four_way_identity(identity_runs):
    """trace(S) = N = integral(rho) = sum(chi-) at 1e-6 on every snapshot,
    and charge conservation at 1e-4, for a perturbative and a supercritical
    run with complete sets."""
    details = []
    ok = True
    for res in identity_runs:
        ident = res.invariant_checks["pair_number_identity"]
        charge = res.invariant_checks["charge_conservation"]
        ok &= ident["value"] < 1e-6 and charge["value"] < 1e-4
        details.append(
            f"{res.config.scenario}: identity {ident['value']:.1e}, "
            f"charge {charge['value']:.1e}"
        )
    _report(4, ok, "; ".join(details))


def test_criterion_05_enhancement_ordering(narrow_run, wide_run):
    """Gamma(D=2.443) > Gamma(D=3.2) with ratio 1.72 +- 0.35; d reaches 0.3."""
    g_n = narrow_run.analysis.get("gamma")
    g_w = wide_run.analysis.get("gamma")
    d_n = float(np.min(narrow_run.series["d"]))
    d_w = float(np.min(wide_run.series["d"]))
    ratio = g_n / g_w if g_n and g_w else float("nan")
    ok = (g_n is not None and g_w is not None and g_n > g_w
          and abs(ratio - 1.72) < 0.35 and d_n <= 0.31 and d_w <= 0.31)
    _report(5, ok, f"Gamma ratio {ratio:.3f} (want 1.72 +- 0.35); "
                   f"d reached {d_n:.3f} / {d_w:.3f}")


def test_criterion_06_positron_spectrum(spectra_run):
    """chi+ peaks at |p| = 0.71 +- 0.05 and is p -> -p asymmetric;
    sea depletion peaks at E = -1.23 +- 0.05."""
    res = spectra_run
    grid = make_grid(res.config.L, res.config.N)
    chi_plus = res.spectra["chi_plus"]
    p = grid.p
    main = np.abs(p) < 2.0
    peaks = {}
    for sign in (+1, -1):
        m = main & (np.sign(p) == sign)
        k = np.argmax(chi_plus[m])
        peaks[sign] = p[m][k]
    asym = float(np.sum(np.abs(chi_plus[1:grid.N // 2]
                               - chi_plus[grid.N // 2 + 1:][::-1]))
                 / np.sum(chi_plus))

    # depletion of the instantaneous sea states
    occ = res.spectra["occ_all"]
    energies = res.spectra["occ_energies"]
    sea = (energies < -1.0) & (energies > -2.0)
    e_dep = energies[sea][np.argmax(1.0 - occ[sea])]

    ok = (abs(abs(peaks[+1]) - 0.71) < 0.05 and abs(abs(peaks[-1]) - 0.71) < 0.05
          and asym > 0.01 and abs(e_dep + 1.23) < 0.05)
    _report(6, ok, f"chi+ peaks at {peaks[+1]:+.3f}/{peaks[-1]:+.3f} "
                   f"(want +-0.71 +- 0.05), asymmetry {asym:.3f}, "
                   f"depletion peak {e_dep:.3f} (want -1.23 +- 0.05)")


def test_criterion_07_saturation_and_slopes(saturation_run, slopes_run):
    """N_b -> 1 +- 0.05; late slope(N) matches slope(N_c) within 3%.

    The slope half needs the ground channel saturated inside a box whose
    recurrence time exceeds the whole window, which is out of reach on this
    hardware (see the decisions ledger); it is asserted as specified and
    expected to fail at the feasible scale.
    """
    nb_end = float(saturation_run.series["n_b"][-1])
    sat_ok = abs(nb_end - 1.0) <= 0.05
    slope_n = slopes_run.analysis.get("slope_n")
    slope_nc = slopes_run.analysis.get("slope_nc")
    if slope_n is None or slope_nc is None:
        _report(7, False, f"slope fit missing: {slopes_run.analysis.get('slope_error')}")
    rel = abs(slope_n - slope_nc) / abs(slope_nc)
    slope_ok = rel <= 0.03
    _report(7, sat_ok and slope_ok,
            f"saturation {'ok' if sat_ok else 'BAD'}: N_b(T_end) = {nb_end:.4f} "
            f"(want 1 +- 0.05); slopes {'ok' if slope_ok else 'BAD'}: "
            f"slope(N) = {slope_n:.3e} vs slope(N_c) = {slope_nc:.3e} "
            f"({100 * rel:.1f}%, want <= 3%)")


def test_criterion_08_two_state(two_state_run):
    """Two-bound-state well: N approaches 2 with log-linear d = |2 - N|
    (R^2 > 0.98) while d = |1 - N_b| is not log-linear (R^2 < 0.9)."""
    res = two_state_run
    t = res.series["t"]
    n_tot = res.series["n_bound_total"]
    d2_fit = res.analysis.get("gamma_two_state_fit", {})
    r2_two = d2_fit.get("r_squared", 0.0)
    # the single-state misuse, fitted over the spec window where reachable
    d1 = decay_probability(TimeSeries(t, res.series["n_b"]), saturation=1)
    lo = max(0.05, float(d1.values.min()) * 1.02)
    try:
        r2_one = fit_decay_rate(d1, d_window=(lo, 0.8)).r_squared
    except ConvergenceError:
        r2_one = 1.0
    approaches_two = n_tot[-1] >= 1.5
    ok = approaches_two and r2_two > 0.98 and r2_one < 0.9
    _report(8, ok, f"N(T_end) = {n_tot[-1]:.3f} (want >= 1.5 en route to 2); "
                   f"R2[|2-N|] = {r2_two:.4f} (want > 0.98); "
                   f"R2[|1-N_b|] = {r2_one:.4f} (want < 0.9)")


def test_criterion_09_supercritical(sc_narrow_run, sc_wide_run):
    """E_qb = -1.10 +- 0.03, N -> 1 +- 0.03, S+ peak at 1.10 +- 0.05,
    FWHM(D=3.2) > FWHM(D=4.0) with FWHM ratio matching the Gamma ratio
    within 25%."""
    n, w = sc_narrow_run.analysis, sc_wide_run.analysis
    fwhm_ratio = n["s_plus_fwhm"] / w["s_plus_fwhm"]
    gamma_ratio = n["gamma"] / w["gamma"]
    ok = (abs(n["quasibound_energy"] + 1.10) < 0.03
          and abs(w["quasibound_energy"] + 1.10) < 0.03
          and abs(n["n_final_turnoff"] - 1.0) < 0.03
          and abs(w["n_final_turnoff"] - 1.0) < 0.03
          and abs(n["s_plus_peak_energy"] - 1.10) < 0.05
          and abs(w["s_plus_peak_energy"] - 1.10) < 0.05
          and n["s_plus_fwhm"] > w["s_plus_fwhm"]
          and abs(fwhm_ratio - gamma_ratio) < 0.25 * gamma_ratio)
    _report(9, ok,
            f"E_qb = {n['quasibound_energy']:.3f}/{w['quasibound_energy']:.3f}; "
            f"N_final = {n['n_final_turnoff']:.3f}/{w['n_final_turnoff']:.3f}; "
            f"S+ peaks {n['s_plus_peak_energy']:.3f}/{w['s_plus_peak_energy']:.3f}; "
            f"FWHM {n['s_plus_fwhm']:.4f} > {w['s_plus_fwhm']:.4f}, "
            f"FWHM ratio {fwhm_ratio:.2f} vs Gamma ratio {gamma_ratio:.2f}")


@pytest.fixture(scope="session")
def sweep_run(tmp_path_factory):
    cfg = _preset_cfg("sweep-default", tmp_path_factory.mktemp("sweep"))
    return run_scenario(cfg)


def test_criterion_10_sweep(sweep_run):
    """>= 5 tuned wells outside the resonance window: strictly decreasing
    Gamma versus W_b with log-linear R^2 > 0.9."""
    rows = [r for r in sweep_run.analysis["rows"]
            if not r["failed"] and not r["in_resonance_window"]]
    gammas = [r["gamma"] for r in rows]
    decreasing = all(a > b for a, b in zip(gammas, gammas[1:]))
    r2 = sweep_run.analysis["r_squared"]
    ok = len(rows) >= 5 and decreasing and r2 > 0.9
    detail = ", ".join(f"W_b={r['W_b']:.3f}: {r['gamma']:.2e}" for r in rows)
    _report(10, ok, f"{len(rows)} rows, C = {sweep_run.analysis['C']:.2f}, "
                    f"R2 = {r2:.4f}; {detail}")


def test_criterion_11_numerics(tmp_path_factory):
    """Richardson ratio in [3, 5]; doubling N or p_max moves N(T_end) by
    < 1%; different worker counts give byte-identical CSV bodies."""
    basis = FreeBasis(DESK)
    sel = mode_cutoff_indices(DESK, 1.0)
    probe = basis.states(-1, sel[:8])
    well = FieldConfig(V0=1.726, D=3.2, W=0.3, T=30.0, dT=5.0)
    ratio = richardson_ratio(probe, well, DESK, t_start=-5.0, horizon=8.0, dt=0.05)

    def short_run(N, p_max, workers, out):
        cfg = RunConfig(
            scenario="perturbative", method="batch", V0=1.9, D=2.443, W=0.3,
            omega=0.45, E0=0.3, L=LASER_L6, N=N, T=150.0,
            p_max=p_max, evolve_positive=False, sample_every=10.0,
            snapshot_every=50.0, workers=workers, out=out,
        )
        return run_scenario(cfg)

    base = short_run(512, 4.0, WORKERS, None).analysis["n_raw_final"]
    dbl_n = short_run(1024, 4.0, WORKERS, None).analysis["n_raw_final"]
    dbl_p = short_run(512, 8.0, WORKERS, None).analysis["n_raw_final"]
    rel_n = abs(dbl_n - base) / base
    rel_p = abs(dbl_p - base) / base

    bodies = []
    for workers in (1, 2):
        out = tmp_path_factory.mktemp(f"det{workers}")
        short_run(512, 4.0, workers, str(out))
        bodies.append((out / "timeseries.csv").read_bytes()
                      + (out / "momentum_spectrum.csv").read_bytes())
    identical = bodies[0] == bodies[1]

    ok = 3.0 <= ratio <= 5.0 and rel_n < 0.01 and rel_p < 0.01 and identical
    _report(11, ok, f"Richardson ratio {ratio:.2f} (want [3, 5]); "
                    f"N-doubling {100 * rel_n:.3f}%, p_max-doubling {100 * rel_p:.3f}% "
                    f"(want < 1%); worker byte-identity {identical}")
