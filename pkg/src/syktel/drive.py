"""Gravitational-wave drive waveforms and the drive application policy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROTOCOL_STEPS = ("prep_backward", "prep_forward", "readout")


@dataclass(frozen=True)
class Waveform:
    """Dimensionless strain profile h(t), |h| <= 1.

    kind 'none': h = 0.  kind 'monochromatic': h = cos(omega t) at every
    clock time, negative times included.  kind 'chirp': windowed linear
    frequency sweep

        h(t) = sin(pi t / T) cos(omega_start t
                                 + (omega_end - omega_start) t^2 / (2 t_star))

    on 0 <= t <= T with T = t_star + window_pad, and exactly zero outside;
    past T the envelope formula would go negative, which is unintended, so
    it is clamped.  The instantaneous frequency sweeps from omega_start to
    omega_end over [0, t_star].
    """

    kind: str = "none"
    omega: float = 0.0
    omega_start: float = 0.5
    omega_end: float = math.pi
    t_star: float = 7.0
    window_pad: float = 0.1

    def __post_init__(self):
        if self.kind not in ("none", "monochromatic", "chirp"):
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        if self.kind == "chirp" and self.t_star <= 0:
            raise ValueError("chirp needs t_star > 0")


def eval_waveform(w: Waveform, t):
    """h(t); accepts scalars or arrays, pure and vectorized."""
    t = np.asarray(t, dtype=float)
    if w.kind == "none":
        out = np.zeros_like(t)
    elif w.kind == "monochromatic":
        out = np.cos(w.omega * t)
    else:
        total = w.t_star + w.window_pad
        phase = w.omega_start * t + (w.omega_end - w.omega_start) * t**2 / (
            2.0 * w.t_star
        )
        out = np.where(
            (t >= 0.0) & (t <= total),
            np.sin(math.pi * t / total) * np.cos(phase),
            0.0,
        )
    return out if out.ndim else float(out)


def rms_amplitude(w: Waveform, t0: float, t1: float, dt: float = 0.05) -> float:
    """Root-mean-square of h over [t0, t1], midpoint quadrature at step dt."""
    if t1 <= t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    n = max(1, math.ceil((t1 - t0) / dt))
    step = (t1 - t0) / n
    pts = t0 + (np.arange(n) + 0.5) * step
    return float(np.sqrt(np.mean(eval_waveform(w, pts) ** 2)))


@dataclass(frozen=True)
class DriveSpec:
    """Drive strength, waveform, and application policy.

    ``sides`` restricts which boundaries couple to the strain operator and
    ``active_steps`` restricts which protocol steps see the drive.  The
    monochromatic waveform is evaluated at the physical clock time, so the
    backward preparation step samples it at negative times; the chirp
    vanishes there by construction.
    """

    epsilon: float = 0.0
    waveform: Waveform = field(default_factory=Waveform)
    sides: frozenset = frozenset(("L", "R"))
    active_steps: frozenset = frozenset(PROTOCOL_STEPS)

    def __post_init__(self):
        bad = set(self.sides) - {"L", "R"}
        if bad:
            raise ValueError(f"unknown sides {sorted(bad)}")
        bad = set(self.active_steps) - set(PROTOCOL_STEPS)
        if bad:
            raise ValueError(f"unknown active_steps {sorted(bad)}")

    def active_on(self, step: str, side: str) -> bool:
        """Whether the drive term enters this protocol step on this side."""
        if self.epsilon == 0.0 or self.waveform.kind == "none":
            return False
        return step in self.active_steps and side in self.sides


def no_drive() -> DriveSpec:
    return DriveSpec(epsilon=0.0, waveform=Waveform("none"))


def bilateral_monochromatic(epsilon: float, omega: float) -> DriveSpec:
    """Scan policy: strain on both boundaries during every step."""
    return DriveSpec(
        epsilon=epsilon,
        waveform=Waveform("monochromatic", omega=omega),
        sides=frozenset(("L", "R")),
        active_steps=frozenset(PROTOCOL_STEPS),
    )


def readout_chirp(
    epsilon: float, t_star: float, omega_start: float = 0.5,
    omega_end: float = 2.0 * math.pi / 2.0, window_pad: float = 0.1,
) -> DriveSpec:
    """Chirp policy: right boundary only, readout leg only."""
    return DriveSpec(
        epsilon=epsilon,
        waveform=Waveform(
            "chirp", omega_start=omega_start, omega_end=omega_end,
            t_star=t_star, window_pad=window_pad,
        ),
        sides=frozenset(("R",)),
        active_steps=frozenset(("readout",)),
    )
