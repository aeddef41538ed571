"""Pair vacuum, thermofield double, and initial-state assembly."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from syktel.hamiltonians import HamiltonianSet
from syktel.register import OperatorMatrix, build_fermion, build_layout
from syktel.states import (
    assemble_initial_state,
    build_infinite_tfd,
    build_tfd,
    fermion_apply_boundary,
    gibbs_density,
    infinite_boundary,
    left_marginal,
    thermal_boundary,
)


def test_pair_vacuum_annihilated_by_every_fermion(ham_factory):
    lay = build_layout(8)
    psi = infinite_boundary(lay)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
    for i in range(8):
        assert np.linalg.norm(fermion_apply_boundary(4, i, psi)) < 1e-10


def test_pair_vacuum_matches_sparse_fermions():
    # cross-check the boundary-factor arithmetic against the full-register
    # sparse annihilators
    lay = build_layout(6)
    full = build_infinite_tfd(lay)
    for i in range(6):
        c = build_fermion(lay, i)
        assert np.linalg.norm(c.apply(full)) < 1e-10


def test_pair_vacuum_is_maximally_entangled():
    lay = build_layout(8)
    rho = left_marginal(infinite_boundary(lay))
    assert_allclose(rho, np.eye(16) / 16.0, atol=1e-12)


def test_pair_vacuum_phase_canonical_and_deterministic():
    lay = build_layout(10)
    a = infinite_boundary(lay)
    b = infinite_boundary(lay)
    assert np.array_equal(a, b)
    flat = a.reshape(-1)
    top = flat[np.argmax(np.abs(flat))]
    assert top.real > 0 and abs(top.imag) < 1e-14


def test_left_right_energy_match_on_vacuum(ham_factory):
    ham = ham_factory(8, 3)
    psi = infinite_boundary(ham.layout)
    h = ham.h_left.mat
    assert np.linalg.norm(h @ psi - psi @ h.T) < 1e-10


def test_tfd_zero_beta_is_pair_vacuum(ham_factory):
    ham = ham_factory(8, 0)
    assert np.array_equal(build_tfd(ham, 0.0), build_infinite_tfd(ham.layout))


@pytest.mark.parametrize("beta", [0.37, 2.0])
def test_tfd_left_marginal_is_gibbs(ham_factory, beta):
    # criterion: at N=8 the reduced left state equals exp(-beta H)/Z
    ham = ham_factory(8, 1)
    psi = thermal_boundary(ham, beta)
    rho = left_marginal(psi)
    sigma = gibbs_density(ham.h_left.mat, beta)
    dist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - sigma)))
    assert dist < 1e-8


def test_tfd_deterministic_and_normalized(ham_factory):
    ham = ham_factory(12, 2)
    a = thermal_boundary(ham, 2.0)
    assert np.array_equal(a, thermal_boundary(ham, 2.0))
    assert abs(np.linalg.norm(a) - 1.0) < 1e-12


def test_tfd_rejects_bad_inputs(ham_factory):
    ham = ham_factory(8, 0)
    with pytest.raises(ValueError):
        build_tfd(ham, -0.1)
    h = ham.h_left
    crooked = OperatorMatrix(
        h.mat + 1e-3 * np.triu(np.ones_like(h.mat)), "left", ham.layout,
        hermitian=True,
    )
    broken = HamiltonianSet(
        couplings=ham.couplings, layout=ham.layout, h_left=crooked,
        h_right=ham.h_right, strain_left=ham.strain_left,
        strain_right=ham.strain_right, nu=ham.nu,
    )
    with pytest.raises(ValueError):
        thermal_boundary(broken, 1.0)


def test_assemble_initial_state_bell_structure(ham_factory):
    ham = ham_factory(8, 0)
    d = ham.layout.dim_side
    tfd = build_tfd(ham, 2.0)
    psi = assemble_initial_state(tfd, ham.layout)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
    t = psi.reshape(4, d, d)
    assert_allclose(t[0], t[3], atol=1e-15)
    assert np.linalg.norm(t[1]) == 0 and np.linalg.norm(t[2]) == 0
    assert_allclose(
        np.linalg.norm(t[0]) ** 2, 0.5, atol=1e-12
    )
    with pytest.raises(ValueError):
        assemble_initial_state(psi, ham.layout)
