"""Register layout and Majorana algebra checks.

The Jordan-Wigner oracle below is built independently of the library's
bit-mask machinery: explicit numpy.kron products of Pauli matrices in the
documented qubit order.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from syktel.register import (
    PAULI,
    OperatorMatrix,
    apply_block_qubit_gate,
    boundary_pair_factors,
    build_fermion,
    build_layout,
    build_majorana,
    compose,
    majorana_dense,
    majorana_string,
    string_matrix,
)


def kron_chain(*labels):
    out = np.array([[1.0 + 0.0j]])
    for lab in labels:
        out = np.kron(out, PAULI[lab])
    return out


def test_layout_dimensions():
    lay = build_layout(12)
    assert lay.n_side_qubits == 6
    assert lay.dim_side == 64
    assert lay.n_qubits == 14
    assert lay.total_dim == 16384
    assert build_layout(4).total_dim == 64


@pytest.mark.parametrize("n", [3, 7, 0, 22])
def test_layout_rejects_bad_n(n):
    with pytest.raises(ValueError):
        build_layout(n)


def test_local_majoranas_match_kron_oracle():
    # two qubits per side: gamma0..3 = XI, YI, ZX, ZY
    expected = [
        kron_chain("X", "I"),
        kron_chain("Y", "I"),
        kron_chain("Z", "X"),
        kron_chain("Z", "Y"),
    ]
    for k, mat in enumerate(expected):
        assert_allclose(majorana_dense(2, k), mat, atol=1e-15)


def test_local_majorana_algebra():
    n_side = 3
    mats = [majorana_dense(n_side, k) for k in range(6)]
    eye = np.eye(8)
    for a, ma in enumerate(mats):
        assert_allclose(ma, ma.conj().T, atol=1e-15)
        for b, mb in enumerate(mats):
            anti = ma @ mb + mb @ ma
            assert_allclose(anti, 2.0 * (a == b) * eye, atol=1e-14)


@given(
    a=st.tuples(st.sampled_from([1, 1j, -1, -1j]),
                st.integers(0, 7), st.integers(0, 7)),
    b=st.tuples(st.sampled_from([1, 1j, -1, -1j]),
                st.integers(0, 7), st.integers(0, 7)),
)
@settings(max_examples=60, deadline=None)
def test_string_composition_matches_matrix_product(a, b):
    prod = string_matrix(compose(a, b), 3)
    assert_allclose(prod, string_matrix(a, 3) @ string_matrix(b, 3),
                    atol=1e-14)


def test_full_register_anticommutation():
    lay = build_layout(6)
    ops = {}
    for side in "LR":
        for i in range(6):
            ops[(side, i)] = build_majorana(lay, side, i).mat.toarray()
    eye = np.eye(lay.total_dim)
    for ka, ma in ops.items():
        assert_allclose(ma, ma.conj().T, atol=1e-14)
        assert_allclose(ma @ ma, eye, atol=1e-14)
        for kb, mb in ops.items():
            if kb < ka:
                continue
            anti = ma @ mb + mb @ ma
            assert_allclose(anti, 2.0 * (ka == kb) * eye, atol=1e-13,
                            err_msg=f"{ka} vs {kb}")


@given(
    i=st.integers(0, 7), j=st.integers(0, 7),
    sa=st.sampled_from("LR"), sb=st.sampled_from("LR"),
)
@settings(max_examples=25, deadline=None)
def test_anticommutation_at_n8(i, j, sa, sb):
    lay = build_layout(8)
    ma = build_majorana(lay, sa, i).mat
    mb = build_majorana(lay, sb, j).mat
    anti = (ma @ mb + mb @ ma).toarray()
    same = (sa == sb) and (i == j)
    assert_allclose(anti, 2.0 * same * np.eye(lay.total_dim), atol=1e-13)


def test_majorana_identity_on_message_ancilla():
    lay = build_layout(4)
    mat = build_majorana(lay, "R", 2).mat.toarray()
    blocks = mat.reshape(4, 16, 4, 16)
    ref = blocks[0, :, 0, :]
    for mu in range(4):
        for nu in range(4):
            want = ref if mu == nu else np.zeros((16, 16))
            assert_allclose(blocks[mu, :, nu, :], want, atol=1e-15)


def test_majorana_argument_validation():
    lay = build_layout(6)
    with pytest.raises(ValueError):
        build_majorana(lay, "X", 0)
    with pytest.raises(ValueError):
        build_majorana(lay, "L", 6)
    with pytest.raises(ValueError):
        majorana_string(3, -1)


def test_fermions_anticommute_canonically():
    lay = build_layout(4)
    cs = [build_fermion(lay, i).mat.toarray() for i in range(4)]
    eye = np.eye(lay.total_dim)
    zero = np.zeros_like(eye)
    for i, ci in enumerate(cs):
        for j, cj in enumerate(cs):
            assert_allclose(ci @ cj + cj @ ci, zero, atol=1e-14)
            cdj = cj.conj().T
            assert_allclose(ci @ cdj + cdj @ ci, (i == j) * eye, atol=1e-14)


def test_boundary_pair_factors_reproduce_full_product():
    lay = build_layout(6)
    d = lay.dim_side
    rng = np.random.default_rng(5)
    psi = rng.standard_normal(lay.total_dim) + 1j * rng.standard_normal(
        lay.total_dim
    )
    for i in range(6):
        gl = build_majorana(lay, "L", i)
        gr = build_majorana(lay, "R", i)
        full = gl.apply(gr.apply(psi))
        a, b = boundary_pair_factors(lay.n_side_qubits, i)
        t = psi.reshape(4, d, d)
        fact = np.matmul(a, t) @ b.T
        assert_allclose(fact.reshape(-1), full, atol=1e-13)


def test_block_apply_matches_kron_embedding():
    lay = build_layout(4)
    d = lay.dim_side
    rng = np.random.default_rng(7)
    block = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    psi = rng.standard_normal(lay.total_dim) + 1j * rng.standard_normal(
        lay.total_dim
    )
    left = OperatorMatrix(block, "left", lay)
    right = OperatorMatrix(block, "right", lay)
    eye4, eyed = np.eye(4), np.eye(d)
    full_l = np.kron(eye4, np.kron(block, eyed))
    full_r = np.kron(eye4, np.kron(eyed, block))
    assert_allclose(left.apply(psi), full_l @ psi, atol=1e-12)
    assert_allclose(right.apply(psi), full_r @ psi, atol=1e-12)
    assert left.norm_bound() >= np.linalg.norm(block, 2) - 1e-12


def test_block_qubit_gate_oracle():
    rng = np.random.default_rng(11)
    t = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
    got = apply_block_qubit_gate(t, 1, 1, PAULI["Y"], 2)
    op = kron_chain("I", "Y")
    want = np.einsum("ij,bjr->bir", op, t)
    assert_allclose(got, want, atol=1e-14)
    got0 = apply_block_qubit_gate(t, 2, 0, PAULI["X"], 2)
    opx = kron_chain("X", "I")
    want0 = np.einsum("ij,blj->bli", opx, t)
    assert_allclose(got0, want0, atol=1e-14)
