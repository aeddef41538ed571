"""SYK Hamiltonians and the strain (mass-quadrupole) operator.

Convention: the four-fermion Hamiltonian is the 1/4!-normalized sum over all
ordered index tuples of an unsymmetrized Gaussian tensor with per-entry
variance 6 J^2 / N^3.  Collapsing the 24 signed entries of each index set
onto its sorted representative leaves independent Gaussian couplings scaled
by 1/sqrt(24):

    H = - (1/sqrt(24)) sum_{i<j<k<l} J_ijkl gamma_i gamma_j gamma_k gamma_l ,

so the effective per-quadruple standard deviation is J / (2 N^{3/2}).  The
sampler draws the sorted-quadruple couplings at variance 6 J^2 / N^3 and the
block assembly folds in the 1/sqrt(24).  At N = 12 this gives an RMS
eigenvalue of 0.27 J and a spectral edge near 0.8 J, the scales every grid
in this package assumes.

Because both boundaries carry the same Majorana content and every term is an
even product, the left and right Hamiltonians share one dim_side x dim_side
block matrix; the right boundary's Jordan-Wigner Z strings cancel pairwise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .register import (
    OperatorMatrix,
    RegisterLayout,
    _parity,
    compose,
    majorana_string,
)


@dataclass
class CouplingTensor:
    """Disorder realization: couplings on lexicographic quadruples i<j<k<l."""

    n: int
    j: float
    seed: int
    values: np.ndarray
    _quads: list | None = field(default=None, repr=False)
    _index: dict | None = field(default=None, repr=False)

    def quadruples(self) -> list[tuple[int, int, int, int]]:
        if self._quads is None:
            self._quads = list(combinations(range(self.n), 4))
        return self._quads

    def value(self, i: int, j: int, k: int, l: int) -> float:
        """Coupling of a quadruple given in any order (symmetric lookup)."""
        if self._index is None:
            self._index = {q: a for a, q in enumerate(self.quadruples())}
        key = tuple(sorted((i, j, k, l)))
        return float(self.values[self._index[key]])


def sample_couplings(n: int, seed: int, j: float = 1.0) -> CouplingTensor:
    """Draw J_ijkl ~ N(0, 6 j^2 / n^3) lexicographically from a PCG64 stream.

    The generator seeded here is the only randomness consumer in a
    realization, so a (n, seed, j) triple pins the disorder bit for bit.
    """
    if n % 2 or n < 4:
        raise ValueError(f"n must be even and >= 4, got {n}")
    rng = np.random.default_rng(seed)
    count = math.comb(n, 4)
    sigma = j * math.sqrt(6.0 / n**3)
    values = rng.standard_normal(count) * sigma
    return CouplingTensor(n=n, j=j, seed=seed, values=values)


def _accumulate_strings(
    terms: dict[tuple[int, int], complex], n_side_qubits: int
) -> np.ndarray:
    dim = 1 << n_side_qubits
    mat = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim, dtype=np.int64)
    for (x, z), coeff in terms.items():
        if coeff == 0:
            continue
        signs = 1.0 - 2.0 * _parity(cols, z)
        mat[cols ^ x, cols] += coeff * signs
    return mat


# ordered-tuple prefactor folded onto sorted quadruples: 1/4! times the
# 24 signed permutation entries collapses to 1/sqrt(24) in distribution
_QUAD_FOLD = 1.0 / math.sqrt(24.0)


def syk_block(couplings: CouplingTensor) -> np.ndarray:
    """Dense single-boundary block of the SYK Hamiltonian."""
    nb = couplings.n // 2
    strings = [majorana_string(nb, k) for k in range(couplings.n)]
    terms: dict[tuple[int, int], complex] = {}
    for a, (i, j, k, l) in enumerate(couplings.quadruples()):
        s = compose(compose(strings[i], strings[j]),
                    compose(strings[k], strings[l]))
        phase, x, z = s
        coeff = -_QUAD_FOLD * couplings.values[a] * phase
        terms[(x, z)] = terms.get((x, z), 0.0) + coeff
    return _accumulate_strings(terms, nb)


def build_syk(
    couplings: CouplingTensor, side: str, layout: RegisterLayout
) -> OperatorMatrix:
    """SYK Hamiltonian of one boundary as a dense-block operator."""
    if side not in ("L", "R"):
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    if layout.n_majorana != couplings.n:
        raise ValueError("layout and couplings disagree on N")
    block = syk_block(couplings)
    acts = "left" if side == "L" else "right"
    return OperatorMatrix(block, acts, layout, hermitian=True)


def strain_pair_couplings(couplings: CouplingTensor) -> np.ndarray:
    """Contracted pair couplings Jt_ij = sum_{k<l excl.} J_ijkl / C(n-2, 2).

    Returned as an (n, n) array filled on i < j, zero elsewhere.
    """
    n = couplings.n
    denom = math.comb(n - 2, 2)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            rest = [m for m in range(n) if m != i and m != j]
            acc = 0.0
            for k, l in combinations(rest, 2):
                acc += couplings.value(i, j, k, l)
            out[i, j] = acc / denom
    return out


def strain_block_raw(couplings: CouplingTensor) -> np.ndarray:
    """Unnormalized strain block  sum_{i<j} Jt_ij (i gamma_i gamma_j)."""
    nb = couplings.n // 2
    pair = strain_pair_couplings(couplings)
    strings = [majorana_string(nb, k) for k in range(couplings.n)]
    terms: dict[tuple[int, int], complex] = {}
    for i in range(couplings.n):
        for j in range(i + 1, couplings.n):
            if pair[i, j] == 0.0:
                continue
            phase, x, z = compose(strings[i], strings[j])
            coeff = pair[i, j] * 1j * phase
            terms[(x, z)] = terms.get((x, z), 0.0) + coeff
    return _accumulate_strings(terms, nb)


def build_strain(
    couplings: CouplingTensor,
    side: str,
    layout: RegisterLayout,
    nu: float = 5.0,
) -> OperatorMatrix:
    """Strain operator, spectrally normalized to nu coupling units.

    The target norm is nu times the per-quadruple coupling scale
    j / sqrt(24), the same fold the four-body block carries, so the drive
    amplitude epsilon stays commensurate with the SYK bandwidth across
    system sizes.  Raises a numerical-domain error when the contracted
    couplings vanish identically (nothing to normalize).
    """
    if side not in ("L", "R"):
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    if layout.n_majorana != couplings.n:
        raise ValueError("layout and couplings disagree on N")
    raw = strain_block_raw(couplings)
    norm = float(np.max(np.abs(np.linalg.eigvalsh(raw))))
    if norm == 0.0:
        raise ValueError("strain block is identically zero")
    target = nu * couplings.j * _QUAD_FOLD
    block = raw * (target / norm)
    acts = "left" if side == "L" else "right"
    op = OperatorMatrix(block, acts, layout, hermitian=True)
    op._norm_bound = abs(target)
    return op


@dataclass
class HamiltonianSet:
    """Both boundaries' SYK and strain operators for one realization."""

    couplings: CouplingTensor
    layout: RegisterLayout
    h_left: OperatorMatrix
    h_right: OperatorMatrix
    strain_left: OperatorMatrix
    strain_right: OperatorMatrix
    nu: float

    def syk_eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        # one decomposition serves both sides: identical blocks
        return self.h_left.eigensystem()


def build_hamiltonian_set(
    couplings: CouplingTensor, layout: RegisterLayout, nu: float = 5.0
) -> HamiltonianSet:
    """Assemble SYK and strain operators for both boundaries.

    The four operators reuse two distinct block matrices (left/right blocks
    coincide), so memory stays at two dim_side^2 arrays per realization.
    """
    h_l = build_syk(couplings, "L", layout)
    h_r = OperatorMatrix(h_l.mat, "right", layout, hermitian=True)
    s_l = build_strain(couplings, "L", layout, nu=nu)
    s_r = OperatorMatrix(s_l.mat, "right", layout, hermitian=True)
    s_r._norm_bound = s_l._norm_bound
    return HamiltonianSet(
        couplings=couplings,
        layout=layout,
        h_left=h_l,
        h_right=h_r,
        strain_left=s_l,
        strain_right=s_r,
        nu=nu,
    )


def dump_couplings(couplings: CouplingTensor, path: str) -> None:
    """Write the disorder realization as tab-separated text.

    One line per quadruple: the four indices and the coupling with 17
    significant digits, which round-trips float64 exactly.
    """
    lines = [
        f"# syk-couplings n={couplings.n} j={couplings.j:.17g} "
        f"seed={couplings.seed} count={couplings.values.size}"
    ]
    for (i, j, k, l), v in zip(couplings.quadruples(), couplings.values):
        lines.append(f"{i}\t{j}\t{k}\t{l}\t{v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_couplings(path: str) -> CouplingTensor:
    """Read a coupling dump back; exact inverse of dump_couplings."""
    with open(path) as fh:
        header = fh.readline()
        m = re.match(
            r"# syk-couplings n=(\d+) j=([^ ]+) seed=(-?\d+) count=(\d+)",
            header,
        )
        if not m:
            raise ValueError(f"unrecognized coupling dump header: {header!r}")
        n, j, seed, count = (
            int(m.group(1)),
            float(m.group(2)),
            int(m.group(3)),
            int(m.group(4)),
        )
        quads = []
        values = []
        for line in fh:
            if not line.strip():
                continue
            i, jj, k, l, v = line.split("\t")
            quads.append((int(i), int(jj), int(k), int(l)))
            values.append(float(v))
    tensor = CouplingTensor(n=n, j=j, seed=seed, values=np.array(values))
    if len(values) != count or quads != tensor.quadruples():
        raise ValueError(f"corrupt coupling dump {path}")
    return tensor
