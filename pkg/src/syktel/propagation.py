"""Time evolution: stepped propagators for driven legs, exact eigenbasis
evolution for undriven ones, and a tolerance-controlled Taylor applier.

States are ndarrays whose last two axes are the (left, right) boundary
factors; any leading axes (protocol branches, batched coupling strengths)
broadcast through.  A leg evolves one or both boundaries; both boundary
blocks of a realization are the same matrix, so a step needs at most one
matrix exponential per distinct drive coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .drive import DriveSpec, eval_waveform
from .errors import NumericalFailure
from .hamiltonians import HamiltonianSet
from .register import OperatorMatrix

SCHEMES = ("lie_trotter", "strang_midpoint")


@dataclass
class PropagatorConfig:
    """Stepper settings.

    dt_base is the undriven step; strong drives refine it via adaptive_dt.
    scheme picks where the drive coefficient is sampled inside a step:
    'lie_trotter' at the left endpoint (first order), 'strang_midpoint' at
    the midpoint (second order).  expm_strategy 'dense' builds the exact
    step propagator with a Pade expm and applies it by matrix product;
    'taylor' applies a tolerance-controlled scaled Taylor series directly
    to the state; 'auto' uses 'dense' at these block sizes.
    """

    dt_base: float = 0.05
    scheme: str = "strang_midpoint"
    adaptive: bool = True
    expm_tolerance: float = 1e-10
    max_taylor_terms: int = 64
    expm_strategy: str = "auto"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.expm_strategy not in ("auto", "taylor", "dense"):
            raise ValueError(f"unknown expm_strategy {self.expm_strategy!r}")
        if self.dt_base <= 0:
            raise ValueError("dt_base must be positive")


def adaptive_dt(epsilon: float, cfg: PropagatorConfig) -> float:
    """Step size for a driven leg.

    Refines dt_base by 1/(1 + eps/2) once the drive exceeds the coupling
    scale, with a cost floor at 0.02; never coarser than the configured
    base step.
    """
    if not cfg.adaptive or abs(epsilon) <= 1.0:
        return cfg.dt_base
    return min(
        cfg.dt_base, max(0.02, cfg.dt_base / (1.0 + 0.5 * abs(epsilon)))
    )


def _apply_block(psi: np.ndarray, mat: np.ndarray, side: str) -> np.ndarray:
    if side == "L":
        return np.matmul(mat, psi)
    return np.matmul(psi, mat.T)


def expm_action(
    op: OperatorMatrix,
    scale: complex,
    psi: np.ndarray,
    tol: float = 1e-10,
    max_terms: int = 64,
) -> np.ndarray:
    """exp(scale * op) applied to a state by scaled truncated Taylor.

    The argument is split into substeps of unit spectral radius (using a
    cached norm bound); each substep's series stops when the term norm
    drops below tol relative to the partial sum.  Raises NumericalFailure
    if a substep fails to converge within max_terms.
    """
    theta = abs(scale) * op.norm_bound()
    n_sub = max(1, math.ceil(theta))
    sub = scale / n_sub
    out = psi
    for _ in range(n_sub):
        acc = out
        term = out
        for k in range(1, max_terms + 1):
            term = (sub / k) * op.apply(term)
            acc = acc + term
            if np.linalg.norm(term) <= tol * np.linalg.norm(acc):
                break
        else:
            raise NumericalFailure(
                f"expm_action: no convergence in {max_terms} terms "
                f"(theta per substep {abs(sub) * op.norm_bound():.3g}, "
                f"tol {tol:g})"
            )
        out = acc
    return out


def step_propagator(
    ham: HamiltonianSet, coeff: float, h_dt: float
) -> np.ndarray:
    """Dense one-step propagator exp(-i h_dt (h + coeff * s)) on a block."""
    a = ham.h_left.mat
    if coeff != 0.0:
        a = a + coeff * ham.strain_left.mat
    return scipy.linalg.expm(-1j * h_dt * a)


def free_propagator(ham: HamiltonianSet, duration: float) -> np.ndarray:
    """Exact undriven block propagator from the cached eigensystem."""
    w, v = ham.syk_eigensystem()
    phases = np.exp(-1j * duration * w)
    return (v * phases[None, :]) @ v.conj().T


def _taylor_block_op(ham: HamiltonianSet, coeff: float, side: str):
    mat = ham.h_left.mat
    if coeff != 0.0:
        mat = mat + coeff * ham.strain_left.mat
    op = OperatorMatrix(
        mat, "left" if side == "L" else "right", ham.layout, hermitian=True
    )
    op._norm_bound = ham.h_left.norm_bound() + abs(coeff) * abs(ham.nu)
    return op


def evolve(
    psi: np.ndarray,
    ham: HamiltonianSet,
    drive: DriveSpec | None,
    t0: float,
    t1: float,
    cfg: PropagatorConfig,
    step: str = "readout",
    sides: tuple = ("L", "R"),
) -> np.ndarray:
    """Evolve the given boundary factors from clock time t0 to t1.

    psi may be a flat register vector or any tensor whose last two axes are
    the boundary factors; the result matches the input shape.  The drive
    enters on the sides its policy activates for this protocol step; legs
    with no active drive use one exact eigenbasis propagator (or one
    Taylor application when that strategy is forced).
    """
    shape = psi.shape
    d = ham.layout.dim_side
    t = psi.reshape((-1, d, d)) if psi.size % (d * d) == 0 else None
    if t is None or t1 == t0:
        if t is None:
            raise ValueError("state size incompatible with layout")
        return psi
    for s in sides:
        if s not in ("L", "R"):
            raise ValueError(f"unknown side {s!r}")

    active = {
        s: (drive is not None and drive.active_on(step, s)) for s in sides
    }
    duration = t1 - t0

    if not any(active.values()):
        if cfg.expm_strategy == "taylor":
            for s in sides:
                op = _taylor_block_op(ham, 0.0, s)
                t = expm_action(
                    op, -1j * duration, t,
                    tol=cfg.expm_tolerance, max_terms=cfg.max_taylor_terms,
                )
        else:
            p = free_propagator(ham, duration)
            for s in sides:
                t = _apply_block(t, p, s)
        return t.reshape(shape)

    eps = drive.epsilon
    dt = adaptive_dt(eps, cfg)
    n = max(1, math.ceil(abs(duration) / dt))
    h_dt = duration / n
    wave = drive.waveform
    for k in range(n):
        t_sample = t0 + k * h_dt
        if cfg.scheme == "strang_midpoint":
            t_sample += 0.5 * h_dt
        h_val = eval_waveform(wave, t_sample)
        coeffs = {s: (eps * h_val if active[s] else 0.0) for s in sides}
        if cfg.expm_strategy == "taylor":
            for s in sides:
                op = _taylor_block_op(ham, coeffs[s], s)
                t = expm_action(
                    op, -1j * h_dt, t,
                    tol=cfg.expm_tolerance, max_terms=cfg.max_taylor_terms,
                )
        else:
            props = {}
            for s in sides:
                c = coeffs[s]
                if c not in props:
                    props[c] = step_propagator(ham, c, h_dt)
                t = _apply_block(t, props[c], s)
    return t.reshape(shape)
