"""Scrambling diagnostics: OTOCs on the thermofield double, scrambling-time
extraction, and the boundary strain response.

The OTOC is evaluated between two left-boundary Majoranas, so only the left
block's evolution enters; a drive contributes through its left-side strain
term over the whole measurement window regardless of its protocol-step
policy (the step enum describes teleportation legs, which do not exist
here).  The undriven path uses the exact eigenbasis propagator per grid
point.  The driven path makes one incremental forward sweep that collects
the perturbed vectors at every grid time, then one joint backward sweep in
which each vector joins the evolving batch at its own time, so the total
stepping cost stays linear in the grid for the forward pass and the
backward batch reuses one step propagator per substep.  Memory for the
batch is O(grid * dim_side^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drive import PROTOCOL_STEPS, DriveSpec, eval_waveform
from .errors import NoCrossingError
from .hamiltonians import HamiltonianSet
from .propagation import PropagatorConfig, evolve, free_propagator
from .register import majorana_dense
from .states import thermal_boundary

DEFAULT_PAIRS = ((0, 2), (0, 4), (2, 6))
PLATEAU_FRACTION = 0.25


@dataclass
class OTOCCurve:
    """C(t) = (F_OTOC(t) + 1)/2 for one Majorana pair; C(0) = 0, growth
    toward the late-time plateau c_sat signals operator scrambling."""

    t: np.ndarray
    c: np.ndarray
    pair: tuple
    c_sat: float


@dataclass
class ScramblingResult:
    """Half-saturation crossing: C(bracket[0]) < threshold <= C(bracket[1]),
    with t_scr linearly interpolated inside the bracket."""

    t_scr: float
    threshold: float
    bracket: tuple


@dataclass
class ScramblingDelayPoint:
    """Disorder statistics of the drive-induced scrambling delay at one
    amplitude; delta values are per-realization t_scr(eps) - t_scr(0)."""

    eps: float
    t_scr_mean: float
    t_scr_stderr: float
    delta_mean: float
    delta_stderr: float


@dataclass
class StrainResponse:
    """Right-boundary strain expectation during readout evolution, with the
    injected waveform samples for overlay."""

    t: np.ndarray
    s_r: np.ndarray
    h: np.ndarray
    drive: DriveSpec | None


def _left_drive(drive: DriveSpec | None) -> DriveSpec | None:
    """Left-side restriction of a drive, active on every leg, or None."""
    if (
        drive is None
        or drive.epsilon == 0.0
        or drive.waveform.kind == "none"
        or "L" not in drive.sides
    ):
        return None
    return DriveSpec(
        epsilon=drive.epsilon,
        waveform=drive.waveform,
        sides=frozenset(("L",)),
        active_steps=frozenset(PROTOCOL_STEPS),
    )


def _plateau_mean(t: np.ndarray, c: np.ndarray, fraction: float) -> float:
    n = t.size
    m = max(1, int(round(fraction * n)))
    return float(np.mean(c[n - m:]))


def compute_otoc(
    pair: tuple,
    ham: HamiltonianSet,
    drive: DriveSpec | None,
    tfd: np.ndarray,
    t_grid: np.ndarray,
    cfg: PropagatorConfig,
    plateau_fraction: float = PLATEAU_FRACTION,
) -> OTOCCurve:
    """Out-of-time-order correlator F(t) = Re<W(t) V W(t) V> on the given
    two-sided thermal state, returned as C(t) = (F + 1)/2.

    W(t) is the Heisenberg Majorana U_L(t)^dag gamma_i U_L(t) and V the
    static gamma_j; both act on the left block only.  The value at each
    grid time is Re<phi2|phi1> with |phi1> = W(t)V|tfd> and
    |phi2> = V W(t)|tfd>.
    """
    i, j = pair
    lay = ham.layout
    n_maj = lay.n_majorana
    if i == j:
        raise ValueError("OTOC pair must be two distinct Majoranas")
    for k in (i, j):
        if not 0 <= k < n_maj:
            raise ValueError(f"majorana index {k} out of range for N={n_maj}")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0:
        raise ValueError("t_grid must be nonempty, increasing, >= 0")
    d = lay.dim_side
    psi = np.asarray(tfd, dtype=np.complex128).reshape(d, d)
    nb = lay.n_side_qubits
    gi = majorana_dense(nb, i)
    gj = majorana_dense(nb, j)

    shim = _left_drive(drive)
    if shim is None:
        f = _otoc_undriven(ham, psi, gi, gj, t_grid)
    else:
        f = _otoc_driven(ham, shim, psi, gi, gj, t_grid, cfg)
    c = 0.5 * (f + 1.0)
    return OTOCCurve(
        t=t_grid,
        c=c,
        pair=(i, j),
        c_sat=_plateau_mean(t_grid, c, plateau_fraction),
    )


def _otoc_undriven(ham, psi, gi, gj, t_grid):
    a = gj @ psi
    f = np.empty(t_grid.size)
    for k, t in enumerate(t_grid):
        u = free_propagator(ham, float(t))
        uh = u.conj().T
        phi1 = uh @ (gi @ (u @ a))
        phi2 = gj @ (uh @ (gi @ (u @ psi)))
        f[k] = float(np.real(np.vdot(phi2, phi1)))
    return f


def _otoc_driven(ham, shim, psi, gi, gj, t_grid, cfg):
    # forward sweep: carry (U psi, U gj psi) along the grid and record the
    # gamma_i-struck copies at each time
    cur = np.stack([psi, gj @ psi])
    prev = 0.0
    hits = []
    for t in t_grid:
        t = float(t)
        if t != prev:
            cur = evolve(cur, ham, shim, prev, t, cfg,
                         step="readout", sides=("L",))
            prev = t
        hits.append(np.matmul(gi, cur))
    # backward sweep: each struck pair joins the batch at its own time and
    # rides the shared adjoint evolution down to 0
    d = psi.shape[0]
    batch = np.empty((0, d, d), dtype=np.complex128)
    prev = None
    for k in range(t_grid.size - 1, -1, -1):
        t = float(t_grid[k])
        if prev is not None and t != prev and batch.size:
            batch = evolve(batch, ham, shim, prev, t, cfg,
                           step="readout", sides=("L",))
        batch = np.concatenate([batch, hits[k]])
        prev = t
    if prev != 0.0:
        batch = evolve(batch, ham, shim, prev, 0.0, cfg,
                       step="readout", sides=("L",))
    # batch rows, in join order: (W psi, W gj psi) for k = n-1 .. 0
    f = np.empty(t_grid.size)
    for m in range(t_grid.size):
        k = t_grid.size - 1 - m
        r = batch[2 * m]
        s = batch[2 * m + 1]
        f[k] = float(np.real(np.vdot(gj @ r, s)))
    return f


def extract_t_scr(
    curve: OTOCCurve, plateau_fraction: float = PLATEAU_FRACTION
) -> ScramblingResult:
    """Scrambling time at half saturation.

    The plateau is the mean of the final fraction of the grid, the
    threshold is half of it, and t_scr interpolates linearly inside the
    first bracket with C below the threshold on the left and at or above it
    on the right.
    """
    t, c = curve.t, curve.c
    if t.size < 2:
        raise ValueError("need at least two grid points")
    c_sat = _plateau_mean(t, c, plateau_fraction)
    thr = 0.5 * c_sat
    for k in range(1, t.size):
        if c[k - 1] < thr <= c[k]:
            frac = (thr - c[k - 1]) / (c[k] - c[k - 1])
            t_scr = float(t[k - 1] + frac * (t[k] - t[k - 1]))
            return ScramblingResult(
                t_scr=t_scr,
                threshold=float(thr),
                bracket=(float(t[k - 1]), float(t[k])),
            )
    raise NoCrossingError(
        f"no upward crossing of {thr:.4g}; evolution window too short "
        f"or curve saturated before the grid started"
    )


def pair_mean_otoc(
    ham: HamiltonianSet,
    drive: DriveSpec | None,
    tfd: np.ndarray,
    t_grid: np.ndarray,
    cfg: PropagatorConfig,
    pairs=DEFAULT_PAIRS,
    plateau_fraction: float = PLATEAU_FRACTION,
) -> OTOCCurve:
    """Average of the per-pair curves; pair choice drops out at ensemble
    level, so the mean is the realization's scrambling curve."""
    cs = [
        compute_otoc(p, ham, drive, tfd, t_grid, cfg, plateau_fraction).c
        for p in pairs
    ]
    c = np.mean(cs, axis=0)
    t_grid = np.asarray(t_grid, dtype=float)
    return OTOCCurve(
        t=t_grid,
        c=c,
        pair=tuple(pairs),
        c_sat=_plateau_mean(t_grid, c, plateau_fraction),
    )


def scrambling_delay_scan(
    eps_list,
    omega: float,
    hams,
    t_grid: np.ndarray,
    cfg: PropagatorConfig,
    beta: float = 2.0,
    pairs=DEFAULT_PAIRS,
    plateau_fraction: float = PLATEAU_FRACTION,
    drive_builder=None,
) -> list:
    """Scrambling delay versus drive amplitude.

    For each realization the pair-mean curve gives t_scr(eps); the delay
    records t_scr(eps) - t_scr(0) per realization before averaging, so
    disorder offsets in the absolute scrambling time cancel.
    """
    from .drive import bilateral_monochromatic

    eps_list = [float(e) for e in eps_list]
    if eps_list != sorted(eps_list):
        raise ValueError("eps_list must be sorted ascending")
    if eps_list[0] != 0.0:
        raise ValueError("eps_list must include 0 first (delay reference)")
    if drive_builder is None:
        drive_builder = bilateral_monochromatic
    hams = list(hams)
    t_scr = np.empty((len(hams), len(eps_list)))
    for r, ham in enumerate(hams):
        tfd = thermal_boundary(ham, beta)
        for e, eps in enumerate(eps_list):
            drive = drive_builder(eps, omega) if eps != 0.0 else None
            curve = pair_mean_otoc(
                ham, drive, tfd, t_grid, cfg, pairs, plateau_fraction
            )
            t_scr[r, e] = extract_t_scr(curve, plateau_fraction).t_scr
    delta = t_scr - t_scr[:, :1]
    nr = len(hams)
    sd = math.sqrt(nr) if nr > 1 else 1.0
    out = []
    for e, eps in enumerate(eps_list):
        out.append(ScramblingDelayPoint(
            eps=eps,
            t_scr_mean=float(t_scr[:, e].mean()),
            t_scr_stderr=float(t_scr[:, e].std(ddof=1) / sd) if nr > 1
            else 0.0,
            delta_mean=float(delta[:, e].mean()),
            delta_stderr=float(delta[:, e].std(ddof=1) / sd) if nr > 1
            else 0.0,
        ))
    return out


def strain_response(
    ham: HamiltonianSet,
    drive: DriveSpec | None,
    state0: np.ndarray,
    t_grid: np.ndarray,
    cfg: PropagatorConfig,
) -> StrainResponse:
    """Right-boundary strain expectation S_R(t) = <H_strain^R> along the
    readout evolution from the coupled protocol state.

    Walks the grid incrementally with the same stepper the readout leg
    uses; also samples the injected waveform for overlay.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0:
        raise ValueError("t_grid must be nonempty, increasing, >= 0")
    lay = ham.layout
    d = lay.dim_side
    t = np.asarray(state0, dtype=np.complex128).reshape(-1, d, d)
    s_mat = ham.strain_right.mat
    s_r = np.empty(t_grid.size)
    prev = 0.0
    for k, tk in enumerate(t_grid):
        tk = float(tk)
        if tk != prev:
            t = evolve(t, ham, drive, prev, tk, cfg,
                       step="readout", sides=("R",))
            prev = tk
        s_r[k] = float(np.real(np.vdot(t, np.matmul(t, s_mat.T))))
    if drive is not None:
        h = np.asarray(eval_waveform(drive.waveform, t_grid), dtype=float)
    else:
        h = np.zeros(t_grid.size)
    return StrainResponse(t=t_grid, s_r=s_r, h=h, drive=drive)


def strain_susceptibility(
    resp: StrainResponse, eps0: float, nu: float
) -> float:
    """Dimensionless response ratio at the peak of |S_R|:

        chi_R = |S_R(t_peak)| / (eps0 * nu * |h(t_peak)|).

    Undefined when the injected waveform vanishes at the peak time; that
    returns inf rather than guessing a regularization.
    """
    if eps0 <= 0 or nu <= 0:
        raise ValueError("eps0 and nu must be positive")
    k = int(np.argmax(np.abs(resp.s_r)))
    denom = eps0 * nu * abs(float(resp.h[k]))
    if denom == 0.0:
        return math.inf
    return abs(float(resp.s_r[k])) / denom
