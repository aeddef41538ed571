"""SYK and strain construction against brute-force kron oracles."""

import math
from itertools import combinations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from syktel.hamiltonians import (
    CouplingTensor,
    build_hamiltonian_set,
    build_strain,
    build_syk,
    dump_couplings,
    load_couplings,
    sample_couplings,
    strain_block_raw,
    strain_pair_couplings,
    syk_block,
)
from syktel.register import PAULI, build_layout


def kron_majorana(n_side, k):
    q, odd = divmod(k, 2)
    labels = ["Z"] * q + ["Y" if odd else "X"] + ["I"] * (n_side - 1 - q)
    out = np.array([[1.0 + 0.0j]])
    for lab in labels:
        out = np.kron(out, PAULI[lab])
    return out


QUAD_FOLD = 1.0 / math.sqrt(24.0)


def brute_syk_block(couplings):
    n_side = couplings.n // 2
    gammas = [kron_majorana(n_side, k) for k in range(couplings.n)]
    h = np.zeros((2**n_side, 2**n_side), dtype=np.complex128)
    for (i, j, k, l), v in zip(couplings.quadruples(), couplings.values):
        h -= QUAD_FOLD * v * gammas[i] @ gammas[j] @ gammas[k] @ gammas[l]
    return h


def test_single_term_n4_oracle():
    # only J_0123 nonzero: g0 g1 g2 g3 = -ZZ, so H = +(J/sqrt(24)) ZZ
    j0 = 0.7
    eff = QUAD_FOLD * j0
    c = CouplingTensor(n=4, j=1.0, seed=0, values=np.array([j0]))
    h = syk_block(c)
    zz = np.kron(PAULI["Z"], PAULI["Z"])
    assert_allclose(h, eff * zz, atol=1e-15)
    assert_allclose(np.sort(np.linalg.eigvalsh(h)), [-eff, -eff, eff, eff],
                    atol=1e-12)


@pytest.mark.parametrize("seed", [0, 3])
def test_block_matches_brute_force_n6(seed):
    c = sample_couplings(6, seed)
    assert_allclose(syk_block(c), brute_syk_block(c), atol=1e-13)


def test_block_is_hermitian_and_traceless():
    c = sample_couplings(10, 1)
    h = syk_block(c)
    assert_allclose(h, h.conj().T, atol=1e-13)
    assert abs(np.trace(h)) < 1e-12


def test_rms_eigenvalue_identity_and_value():
    # Tr(H^2)/dim equals the folded sum of squared couplings exactly
    # (orthogonal Pauli strings); disorder-averaged RMS at N=12 sits at
    # 1.311 J / sqrt(24) = 0.268 J
    target = math.sqrt(math.comb(12, 4) * 6.0 / 12**3) * QUAD_FOLD
    rms = []
    for seed in range(3):
        c = sample_couplings(12, seed)
        w = np.linalg.eigvalsh(syk_block(c))
        mean_sq = float(np.mean(w**2))
        assert_allclose(mean_sq, float(np.sum(c.values**2)) * QUAD_FOLD**2,
                        rtol=1e-10)
        rms.append(math.sqrt(mean_sq))
        assert 1.8 * QUAD_FOLD < float(np.max(np.abs(w))) < 3.5 * QUAD_FOLD
    assert abs(np.mean(rms) - target) / target < 0.05


def test_coupling_sampling_statistics_and_determinism():
    a = sample_couplings(12, 42)
    b = sample_couplings(12, 42)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, sample_couplings(12, 43).values)
    pooled = np.concatenate([sample_couplings(12, s).values for s in range(3)])
    var_target = 6.0 / 12**3
    assert abs(pooled.var() / var_target - 1.0) < 0.10
    assert abs(pooled.mean()) < 3 * math.sqrt(var_target / pooled.size) * 2


def test_coupling_scale_with_j():
    base = sample_couplings(10, 7, j=1.0)
    doubled = sample_couplings(10, 7, j=2.0)
    assert_allclose(doubled.values, 2.0 * base.values, rtol=1e-15)


def test_z2_gauge_covariance():
    c = sample_couplings(8, 5)
    neg = CouplingTensor(n=8, j=c.j, seed=c.seed, values=-c.values)
    assert_allclose(syk_block(neg), -syk_block(c), atol=1e-14)
    assert_allclose(strain_block_raw(neg), -strain_block_raw(c), atol=1e-14)
    lay = build_layout(8)
    s_pos = build_strain(c, "L", lay).mat
    s_neg = build_strain(neg, "L", lay).mat
    assert_allclose(s_neg, -s_pos, atol=1e-12)


def test_strain_pair_couplings_all_ones():
    n = 6
    count = math.comb(n, 4)
    c = CouplingTensor(n=n, j=1.0, seed=0, values=np.ones(count))
    pair = strain_pair_couplings(c)
    for i in range(n):
        for j in range(n):
            expect = 1.0 if i < j else 0.0
            assert pair[i, j] == pytest.approx(expect, abs=1e-14)


@pytest.mark.parametrize("n,seed", [(6, 2), (8, 9), (10, 4)])
def test_strain_contraction_brute_force(n, seed):
    c = sample_couplings(n, seed)
    pair = strain_pair_couplings(c)
    denom = math.comb(n - 2, 2)
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k, l in combinations(sorted(set(range(n)) - {i, j}), 2):
                acc += c.value(i, j, k, l)
            assert pair[i, j] == pytest.approx(acc / denom, rel=1e-12)


def test_strain_block_brute_force_n6():
    c = sample_couplings(6, 11)
    pair = strain_pair_couplings(c)
    gammas = [kron_majorana(3, k) for k in range(6)]
    want = np.zeros((8, 8), dtype=np.complex128)
    for i in range(6):
        for j in range(i + 1, 6):
            want += pair[i, j] * 1j * gammas[i] @ gammas[j]
    got = strain_block_raw(c)
    assert_allclose(got, want, atol=1e-13)
    assert_allclose(got, got.conj().T, atol=1e-13)


def test_strain_normalization_and_set_sharing():
    lay = build_layout(10)
    c = sample_couplings(10, 3)
    ham = build_hamiltonian_set(c, lay)
    # spectral norm = nu * j / sqrt(24), matching the four-body fold
    for op in (ham.strain_left, ham.strain_right):
        w = np.linalg.eigvalsh(op.mat)
        assert abs(np.max(np.abs(w)) - 5.0 / math.sqrt(24.0)) < 1e-9
    assert ham.h_left.mat is ham.h_right.mat
    assert ham.strain_left.mat is ham.strain_right.mat
    assert ham.h_left.acts_on == "left" and ham.h_right.acts_on == "right"
    w, v = ham.syk_eigensystem()
    assert_allclose(v @ np.diag(w) @ v.conj().T, ham.h_left.mat, atol=1e-10)


def test_unnormalized_strain_grows_with_n():
    # the raw bilinear before the pair-count division: its spectral norm
    # must grow with N at least like sqrt(N)
    med = {}
    for n in (8, 10, 12):
        norms = []
        for seed in range(5):
            c = sample_couplings(n, seed)
            raw = strain_block_raw(c) * math.comb(n - 2, 2)
            norms.append(np.max(np.abs(np.linalg.eigvalsh(raw))))
        med[n] = float(np.median(norms))
    assert med[8] < med[10] < med[12]
    assert med[12] / med[8] > math.sqrt(12.0 / 8.0)


def test_build_syk_validation():
    lay = build_layout(8)
    c = sample_couplings(8, 0)
    with pytest.raises(ValueError):
        build_syk(c, "Q", lay)
    with pytest.raises(ValueError):
        build_syk(sample_couplings(10, 0), "L", lay)
    with pytest.raises(ValueError):
        sample_couplings(7, 0)
    zero = CouplingTensor(n=6, j=1.0, seed=0,
                          values=np.zeros(math.comb(6, 4)))
    with pytest.raises(ValueError):
        build_strain(zero, "L", build_layout(6))


def test_coupling_dump_round_trip(tmp_path):
    c = sample_couplings(10, 17, j=1.5)
    path = tmp_path / "couplings.tsv"
    dump_couplings(c, str(path))
    back = load_couplings(str(path))
    assert back.n == 10 and back.seed == 17 and back.j == 1.5
    assert np.array_equal(back.values, c.values)
    bad = tmp_path / "bad.tsv"
    bad.write_text("# not a dump\n")
    with pytest.raises(ValueError):
        load_couplings(str(bad))
