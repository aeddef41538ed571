"""State preparation: pair vacuum, thermofield double, protocol input.

Boundary-factor convention: a two-boundary pure state is held as a
(dim_side, dim_side) complex matrix psi with |state> = sum_lr psi[l, r]
|l>_left |r>_right, so left operators act as B @ psi and right operators as
psi @ B.T.  Full-register vectors add the message/ancilla factor in front,
flat index ((2m + a)*d + l)*d + r.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalFailure
from .hamiltonians import HamiltonianSet
from .register import (
    RegisterLayout,
    boundary_pair_factors,
    majorana_dense,
    string_matrix,
)

ANNIHILATION_TOL = 1e-10


def _fix_phase(psi: np.ndarray) -> np.ndarray:
    flat = psi.reshape(-1)
    k = int(np.argmax(np.abs(flat)))
    a = flat[k]
    if a == 0:
        return psi
    return psi * (abs(a) / a)


def _pair_number_project(psi: np.ndarray, n_side: int) -> np.ndarray:
    # apply prod_i (1 - n_i); the n_i commute, each is an orthogonal projector
    out = psi
    for i in range(2 * n_side):
        a, b = boundary_pair_factors(n_side, i)
        out = 0.5 * (out - 1j * (a @ out @ b.T))
    return out


def fermion_apply_boundary(n_side: int, i: int, psi: np.ndarray) -> np.ndarray:
    """Action of the nonlocal annihilator c_i = (gL_i + i gR_i)/2 on a
    boundary-factor state."""
    s = majorana_dense(n_side, i)
    zfull = string_matrix((1.0 + 0.0j, 0, (1 << n_side) - 1), n_side)
    return 0.5 * (s @ psi + 1j * (zfull @ psi @ s.T))


def infinite_boundary(layout: RegisterLayout) -> np.ndarray:
    """Unique joint null state of all pair number operators, as (d, d).

    Built by the exact projector product prod_i (1 - n_i) acting on a fixed
    start vector; deterministic bit for bit.  Verifies annihilation by every
    c_i and, via a second independent start vector, uniqueness of the ray.
    """
    d = layout.dim_side
    nb = layout.n_side_qubits
    starts = [np.zeros((d, d), dtype=np.complex128) for _ in range(2)]
    starts[0][0, 0] = 1.0
    rng = np.random.default_rng(0)
    starts[1][:] = rng.standard_normal((d, d)) + 1j * rng.standard_normal(
        (d, d)
    )

    psi = None
    for cand in starts:
        out = _pair_number_project(cand, nb)
        norm = np.linalg.norm(out)
        if norm > 1e-8:
            psi = out / norm
            break
    if psi is None:
        raise NumericalFailure("pair-vacuum projector annihilated all starts")

    worst = max(
        np.linalg.norm(fermion_apply_boundary(nb, i, psi))
        for i in range(layout.n_majorana)
    )
    if worst > ANNIHILATION_TOL:
        raise NumericalFailure(
            f"pair vacuum violates annihilation: max |c_i psi| = {worst:.3g}"
        )

    other = _pair_number_project(starts[1], nb)
    norm_other = np.linalg.norm(other)
    if norm_other > 1e-8:
        overlap = abs(np.vdot(psi, other)) / norm_other
        if abs(overlap - 1.0) > 1e-8:
            raise NumericalFailure("pair vacuum is not unique")

    return _fix_phase(psi)


def build_infinite_tfd(layout: RegisterLayout) -> np.ndarray:
    """Infinite-temperature double state on the full register.

    Message and ancilla are placeholders in |0>; the boundary factor is the
    pair vacuum annihilated by every c_i.
    """
    d = layout.dim_side
    full = np.zeros((4, d, d), dtype=np.complex128)
    full[0] = infinite_boundary(layout)
    return full.reshape(-1)


def thermal_boundary(
    ham: HamiltonianSet, beta: float, steps: int = 64
) -> np.ndarray:
    """exp(-beta H_L / 2)|I>, normalized; (d, d) boundary factor."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    h = ham.h_left.mat
    herm_defect = np.linalg.norm(h - h.conj().T)
    if herm_defect > 1e-10 * max(1.0, np.linalg.norm(h)):
        raise ValueError("left Hamiltonian block is not Hermitian")
    psi = infinite_boundary(ham.layout)
    if beta == 0:
        return psi
    w, v = ham.syk_eigensystem()
    dtau = beta / (2.0 * steps)
    decay = np.exp(-dtau * w)
    for _ in range(steps):
        psi = v @ (decay[:, None] * (v.conj().T @ psi))
        psi /= np.linalg.norm(psi)
    return _fix_phase(psi)


def build_tfd(
    ham: HamiltonianSet, beta: float, steps: int = 64
) -> np.ndarray:
    """Thermofield double at inverse temperature beta on the full register."""
    d = ham.layout.dim_side
    full = np.zeros((4, d, d), dtype=np.complex128)
    full[0] = thermal_boundary(ham, beta, steps=steps)
    return full.reshape(-1)


def assemble_initial_state(
    tfd_state: np.ndarray, layout: RegisterLayout
) -> np.ndarray:
    """Replace the message/ancilla placeholder with a Bell pair.

    Input must be a full-register vector whose message/ancilla factor is
    |00>; output carries (|00> + |11>)/sqrt(2) on those qubits.
    """
    d = layout.dim_side
    t = np.asarray(tfd_state).reshape(4, d, d)
    spill = np.sqrt(sum(float(np.linalg.norm(t[b]) ** 2) for b in (1, 2, 3)))
    if spill > 1e-12:
        raise ValueError(
            "tfd_state must hold |00> on message/ancilla before assembly"
        )
    out = np.zeros_like(t)
    out[0] = t[0] / np.sqrt(2.0)
    out[3] = t[0] / np.sqrt(2.0)
    return out.reshape(-1)


def left_marginal(boundary: np.ndarray) -> np.ndarray:
    """Reduced density matrix of the left boundary of a (d, d) pure state."""
    return boundary @ boundary.conj().T


def gibbs_density(block: np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta h)/Z for a Hermitian block, via eigendecomposition."""
    w, v = np.linalg.eigh(block)
    ex = np.exp(-beta * (w - w.min()))
    ex /= ex.sum()
    return (v * ex[None, :]) @ v.conj().T
