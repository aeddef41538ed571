"""OTOC, scrambling-time, and strain-response diagnostics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from syktel.diagnostics import (
    OTOCCurve,
    StrainResponse,
    _left_drive,
    compute_otoc,
    extract_t_scr,
    pair_mean_otoc,
    scrambling_delay_scan,
    strain_response,
    strain_susceptibility,
)
from syktel.drive import bilateral_monochromatic, readout_chirp
from syktel.errors import NoCrossingError
from syktel.hamiltonians import build_hamiltonian_set, sample_couplings
from syktel.propagation import PropagatorConfig, evolve, free_propagator
from syktel.register import build_layout, majorana_dense
from syktel.states import thermal_boundary


def ham_for(n, seed=0):
    lay = build_layout(n)
    return build_hamiltonian_set(sample_couplings(n, seed), lay), lay


def test_otoc_zero_time_and_validation():
    ham, lay = ham_for(8, seed=0)
    cfg = PropagatorConfig()
    tfd = thermal_boundary(ham, 2.0)
    grid = np.arange(0.0, 3.01, 0.5)
    curve = compute_otoc((0, 2), ham, None, tfd, grid, cfg)
    assert abs(curve.c[0]) < 1e-10
    assert curve.pair == (0, 2)
    assert np.all(curve.c >= -1e-9) and np.all(curve.c <= 1.0 + 1e-9)
    with pytest.raises(ValueError):
        compute_otoc((2, 2), ham, None, tfd, grid, cfg)
    with pytest.raises(ValueError):
        compute_otoc((0, 8), ham, None, tfd, grid, cfg)
    with pytest.raises(ValueError):
        compute_otoc((0, 2), ham, None, tfd, np.array([]), cfg)
    with pytest.raises(ValueError):
        compute_otoc((0, 2), ham, None, tfd, np.array([1.0, 0.5]), cfg)


def test_otoc_undriven_matches_dense_oracle():
    # independent reconstruction: scipy expm for U(t), full operator
    # sandwich, no eigensystem reuse
    ham, lay = ham_for(8, seed=3)
    cfg = PropagatorConfig()
    tfd = thermal_boundary(ham, 2.0)
    nb = lay.n_side_qubits
    grid = np.array([0.0, 0.7, 1.9, 4.2])
    for pair in ((0, 2), (3, 6)):
        curve = compute_otoc(pair, ham, None, tfd, grid, cfg)
        gi = majorana_dense(nb, pair[0])
        gj = majorana_dense(nb, pair[1])
        for k, t in enumerate(grid):
            u = expm(-1j * t * ham.h_left.mat)
            wt = u.conj().T @ gi @ u
            m = wt @ gj @ wt @ gj
            f = np.vdot(tfd, m @ tfd).real
            assert curve.c[k] == pytest.approx(0.5 * (f + 1.0), abs=1e-10)


def test_otoc_driven_incremental_matches_per_point():
    # the joining-batch backward sweep must reproduce a from-scratch
    # four-sweep evaluation at every grid time
    ham, lay = ham_for(8, seed=4)
    cfg = PropagatorConfig()
    tfd = thermal_boundary(ham, 2.0)
    drive = bilateral_monochromatic(0.4, 1.5)
    shim = _left_drive(drive)
    nb = lay.n_side_qubits
    grid = np.array([0.5, 1.0, 2.0])
    curve = compute_otoc((0, 4), ham, drive, tfd, grid, cfg)
    gi = majorana_dense(nb, 0)
    gj = majorana_dense(nb, 4)
    for k, t in enumerate(grid):
        t = float(t)
        x = evolve(tfd, ham, shim, 0.0, t, cfg,
                   step="readout", sides=("L",))
        y = evolve(gj @ tfd, ham, shim, 0.0, t, cfg,
                   step="readout", sides=("L",))
        r = evolve(gi @ x, ham, shim, t, 0.0, cfg,
                   step="readout", sides=("L",))
        s = evolve(gi @ y, ham, shim, t, 0.0, cfg,
                   step="readout", sides=("L",))
        f = np.vdot(gj @ r, s).real
        assert curve.c[k] == pytest.approx(0.5 * (f + 1.0), abs=1e-9)


def test_otoc_driven_reduces_to_undriven_at_tiny_eps():
    ham, lay = ham_for(8, seed=5)
    cfg = PropagatorConfig()
    tfd = thermal_boundary(ham, 2.0)
    grid = np.array([0.0, 1.0, 2.5])
    base = compute_otoc((0, 2), ham, None, tfd, grid, cfg)
    tiny = compute_otoc(
        (0, 2), ham, bilateral_monochromatic(1e-7, 1.5), tfd, grid, cfg
    )
    assert_allclose(tiny.c, base.c, atol=1e-5)


def test_left_drive_policy():
    assert _left_drive(None) is None
    assert _left_drive(bilateral_monochromatic(0.0, 1.5)) is None
    # right-only drives never touch the left Heisenberg operators
    assert _left_drive(readout_chirp(0.5, 7.0)) is None
    shim = _left_drive(bilateral_monochromatic(0.3, 1.5))
    assert shim.sides == frozenset(("L",))
    assert shim.active_on("prep_backward", "L")
    assert shim.active_on("readout", "L")
    assert not shim.active_on("readout", "R")


def test_extract_t_scr_synthetic_exact():
    t = np.arange(0.0, 10.01, 1.0)
    c = np.minimum(t / 10.0, 0.5)
    curve = OTOCCurve(t=t, c=c, pair=(0, 2), c_sat=0.5)
    res = extract_t_scr(curve)
    assert res.threshold == pytest.approx(0.25, abs=1e-15)
    assert res.t_scr == pytest.approx(2.5, abs=1e-12)
    assert res.bracket == (2.0, 3.0)
    assert c[2] < res.threshold <= c[3]


def test_extract_t_scr_no_crossing_and_validation():
    t = np.arange(0.0, 5.01, 1.0)
    flat = OTOCCurve(t=t, c=np.full(t.size, 0.3), pair=(0, 2), c_sat=0.3)
    with pytest.raises(NoCrossingError):
        extract_t_scr(flat)
    single = OTOCCurve(
        t=np.array([0.0]), c=np.array([0.0]), pair=(0, 2), c_sat=0.0
    )
    with pytest.raises(ValueError):
        extract_t_scr(single)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(4, 30),
    seed=st.integers(0, 10_000),
)
def test_extract_t_scr_bracket_property(n, seed):
    # any curve that starts below half its plateau and reaches it yields a
    # bracket containing the interpolated time, with the invariant
    # C(left) < threshold <= C(right)
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.uniform(0.1, 1.0, size=n))
    plateau = rng.uniform(0.2, 0.9)
    ramp = plateau * np.linspace(0.0, 1.0, n) ** rng.uniform(0.5, 2.0)
    curve = OTOCCurve(t=t, c=ramp, pair=(0, 2), c_sat=plateau)
    res = extract_t_scr(curve)
    lo, hi = res.bracket
    assert lo <= res.t_scr <= hi
    k = int(np.searchsorted(t, hi))
    assert curve.c[k - 1] < res.threshold <= curve.c[k]


def test_pair_mean_otoc_averages():
    ham, lay = ham_for(8, seed=6)
    cfg = PropagatorConfig()
    tfd = thermal_boundary(ham, 2.0)
    grid = np.array([0.0, 1.0, 2.0, 3.0])
    pairs = ((0, 2), (0, 4))
    mean = pair_mean_otoc(ham, None, tfd, grid, cfg, pairs=pairs)
    singles = [
        compute_otoc(p, ham, None, tfd, grid, cfg).c for p in pairs
    ]
    assert_allclose(mean.c, np.mean(singles, axis=0), atol=1e-14)
    assert mean.pair == pairs


def test_scrambling_delay_scan_mechanics():
    hams = [
        build_hamiltonian_set(sample_couplings(8, s), build_layout(8))
        for s in (0, 1)
    ]
    cfg = PropagatorConfig()
    grid = np.arange(0.0, 8.01, 0.5)
    points = scrambling_delay_scan(
        [0.0, 0.3], 1.5, hams, grid, cfg, pairs=((0, 2),)
    )
    assert [p.eps for p in points] == [0.0, 0.3]
    assert points[0].delta_mean == 0.0
    assert points[0].delta_stderr == 0.0
    for p in points:
        assert np.isfinite(p.t_scr_mean)
        assert p.t_scr_stderr >= 0.0
    with pytest.raises(ValueError):
        scrambling_delay_scan([0.3, 0.0], 1.5, hams, grid, cfg)
    with pytest.raises(ValueError):
        scrambling_delay_scan([0.1, 0.3], 1.5, hams, grid, cfg)


def random_register_state(lay, seed):
    rng = np.random.default_rng(seed)
    d = lay.dim_side
    v = rng.standard_normal((4, d, d)) + 1j * rng.standard_normal((4, d, d))
    return v / np.linalg.norm(v)


def test_strain_response_undriven_oracle():
    ham, lay = ham_for(6, seed=2)
    cfg = PropagatorConfig()
    state = random_register_state(lay, 9)
    grid = np.array([0.5, 1.0, 2.0])
    resp = strain_response(ham, None, state, grid, cfg)
    assert_allclose(resp.h, 0.0, atol=0)
    s = ham.strain_right.mat
    for k, tk in enumerate(grid):
        p = free_propagator(ham, float(tk))
        t = np.matmul(state, p.T)
        want = float(np.real(np.vdot(t, np.matmul(t, s.T))))
        assert resp.s_r[k] == pytest.approx(want, abs=1e-12)


def test_strain_response_driven_matches_per_point():
    ham, lay = ham_for(6, seed=2)
    cfg = PropagatorConfig()
    state = random_register_state(lay, 11)
    drive = readout_chirp(0.5, 7.0)
    grid = np.array([0.25, 0.5, 1.0])
    resp = strain_response(ham, drive, state, grid, cfg)
    from syktel.drive import eval_waveform

    assert_allclose(resp.h, eval_waveform(drive.waveform, grid), atol=0)
    s = ham.strain_right.mat
    for k, tk in enumerate(grid):
        t = evolve(state, ham, drive, 0.0, float(tk), cfg,
                   step="readout", sides=("R",))
        want = float(np.real(np.vdot(t, np.matmul(t, s.T))))
        assert resp.s_r[k] == pytest.approx(want, abs=1e-9)
    with pytest.raises(ValueError):
        strain_response(ham, drive, state, np.array([]), cfg)


def test_strain_susceptibility_synthetic():
    resp = StrainResponse(
        t=np.array([0.0, 1.0, 2.0]),
        s_r=np.array([0.02, 0.08, 0.03]),
        h=np.array([0.1, 0.4, 0.2]),
        drive=None,
    )
    chi = strain_susceptibility(resp, eps0=0.5, nu=5.0)
    assert chi == pytest.approx(0.08 / (0.5 * 5.0 * 0.4), abs=1e-12)
    dead = StrainResponse(
        t=np.array([0.0, 1.0]),
        s_r=np.array([0.0, 0.05]),
        h=np.array([0.3, 0.0]),
        drive=None,
    )
    assert strain_susceptibility(dead, 0.5, 5.0) == np.inf
    with pytest.raises(ValueError):
        strain_susceptibility(resp, 0.0, 5.0)
