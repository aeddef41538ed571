"""Qubit register layout and Jordan-Wigner Majorana algebra.

Conventions, fixed here once and relied on by every other module:

* The register holds ``2 + N`` qubits ordered message, ancilla, chain.  The
  chain's first ``N/2`` qubits form the left boundary, the rest the right
  boundary.  Indices are big-endian: qubit 0 of a block is the most
  significant bit of the block index, matching the factor order of
  ``numpy.kron``.
* A flat state vector indexes as ``((2*m + a)*d + l)*d + r`` with
  ``d = dim_side``, i.e. ``psi.reshape(2, 2, d, d)[m, a, l, r]``.
* Local (single-boundary) Majoranas follow gamma_{2k} = Z^k X and
  gamma_{2k+1} = Z^k Y on block qubit k, so a boundary of N/2 qubits hosts
  N modes with gamma^2 = 1.
* The full-register gamma^L_i acts as its local string on the left block and
  as identity elsewhere; gamma^R_i additionally carries Z on every left-block
  qubit so that opposite-side modes anticommute.
* A Pauli string is a triple ``(phase, x, z)`` denoting ``phase * X^x * Z^z``
  where bit masks address block qubits (bit of qubit q at position
  ``n - 1 - q``) and ``Y = i X Z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

PauliString = tuple[complex, int, int]


@dataclass(frozen=True)
class RegisterLayout:
    """Geometry of the simulation register for N Majorana modes per side."""

    n_majorana: int

    @property
    def n_side_qubits(self) -> int:
        return self.n_majorana // 2

    @property
    def n_chain_qubits(self) -> int:
        return self.n_majorana

    @property
    def n_qubits(self) -> int:
        return self.n_majorana + 2

    @property
    def dim_side(self) -> int:
        return 1 << self.n_side_qubits

    @property
    def total_dim(self) -> int:
        return 4 * self.dim_side * self.dim_side


def build_layout(n_majorana: int) -> RegisterLayout:
    """Return the register layout for ``n_majorana`` modes per boundary."""
    if n_majorana % 2 or not 2 <= n_majorana <= 20:
        raise ValueError(
            f"n_majorana must be even and in [2, 20], got {n_majorana}"
        )
    return RegisterLayout(n_majorana)


# ---------------------------------------------------------------------------
# Pauli-string algebra on an n-qubit block


def _qbit(n_qubits: int, qubit: int) -> int:
    # qubit 0 is the most significant index bit
    return 1 << (n_qubits - 1 - qubit)


def compose(a: PauliString, b: PauliString) -> PauliString:
    """Product a*b of two Pauli strings in (phase, x, z) canonical form."""
    pa, xa, za = a
    pb, xb, zb = b
    # moving Z^za past X^xb costs a sign per overlapping qubit
    sign = -1.0 if (za & xb).bit_count() % 2 else 1.0
    return (pa * pb * sign, xa ^ xb, za ^ zb)


def _parity(values: np.ndarray, mask: int) -> np.ndarray:
    out = np.zeros_like(values)
    while mask:
        low = mask & -mask
        out ^= (values >> (low.bit_length() - 1)) & 1
        mask ^= low
    return out


def string_matrix(s: PauliString, n_qubits: int, sparse: bool = False):
    """Materialize a Pauli string on ``n_qubits`` as a dense or CSR matrix."""
    phase, x, z = s
    dim = 1 << n_qubits
    cols = np.arange(dim, dtype=np.int64)
    rows = cols ^ x
    vals = np.where(_parity(cols, z) == 1, -phase, phase).astype(np.complex128)
    if sparse:
        return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[rows, cols] = vals
    return mat


def majorana_string(n_side_qubits: int, k: int) -> PauliString:
    """Jordan-Wigner string of local Majorana k on one boundary block."""
    if not 0 <= k < 2 * n_side_qubits:
        raise ValueError(f"majorana index {k} out of range")
    qubit = k // 2
    zmask = 0
    for j in range(qubit):
        zmask |= _qbit(n_side_qubits, j)
    xmask = _qbit(n_side_qubits, qubit)
    if k % 2:  # Y = i X Z on the target qubit
        return (1j, xmask, zmask | xmask)
    return (1.0 + 0.0j, xmask, zmask)


@lru_cache(maxsize=None)
def majorana_dense(n_side_qubits: int, k: int) -> np.ndarray:
    """Dense matrix of local Majorana k on a single boundary block."""
    mat = string_matrix(majorana_string(n_side_qubits, k), n_side_qubits)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def boundary_pair_factors(
    n_side_qubits: int, i: int
) -> tuple[np.ndarray, np.ndarray]:
    """Dense factors (A, B) with gamma^L_i gamma^R_i = I_4 otimes A otimes B.

    The left factor A folds in the right mode's Z string over the whole left
    block; acting on a boundary tensor psi of shape (d, d) the product is
    ``A @ psi @ B.T``.
    """
    zfull = (1.0 + 0.0j, 0, (1 << n_side_qubits) - 1)
    a = string_matrix(compose(majorana_string(n_side_qubits, i), zfull),
                      n_side_qubits)
    b = majorana_dense(n_side_qubits, i)
    a.setflags(write=False)
    return a, b


# ---------------------------------------------------------------------------
# Operators on the register


@dataclass
class OperatorMatrix:
    """An operator together with the register factor it acts on.

    ``acts_on`` selects the storage layout: 'left' and 'right' hold a dense
    dim_side x dim_side block acting on one boundary (identity on message,
    ancilla and the other boundary), 'boundary' holds a sparse
    dim_side^2-dimensional operator on both boundaries jointly, and
    'register' holds a sparse matrix on the full Hilbert space.
    """

    mat: object
    acts_on: str
    layout: RegisterLayout
    hermitian: bool = False
    unitary: bool = False
    _norm_bound: float | None = field(default=None, repr=False)
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Apply to a state with flat register dimension on the last axis."""
        d = self.layout.dim_side
        shape = psi.shape
        if self.acts_on == "register":
            flat = psi.reshape(-1, self.layout.total_dim)
            return (self.mat @ flat.T).T.reshape(shape)
        if self.acts_on == "boundary":
            flat = psi.reshape(-1, d * d)
            return (self.mat @ flat.T).T.reshape(shape)
        t = psi.reshape(-1, 4, d, d)
        if self.acts_on == "left":
            out = np.matmul(self.mat, t)
        elif self.acts_on == "right":
            out = np.matmul(t, self.mat.T)
        else:
            raise ValueError(f"unknown acts_on {self.acts_on!r}")
        return out.reshape(shape)

    def norm_bound(self) -> float:
        """Cached upper bound on the spectral norm (max abs row sum)."""
        if self._norm_bound is None:
            if sp.issparse(self.mat):
                bound = float(abs(self.mat).sum(axis=1).max())
            else:
                bound = float(np.abs(self.mat).sum(axis=1).max())
            self._norm_bound = bound
        return self._norm_bound

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached eigendecomposition; dense hermitian blocks only."""
        if self._eig is None:
            if not self.hermitian or self.acts_on not in ("left", "right"):
                raise ValueError("eigensystem requires a hermitian block")
            w, v = np.linalg.eigh(self.mat)
            self._eig = (w, v)
        return self._eig


def build_majorana(layout: RegisterLayout, side: str, i: int) -> OperatorMatrix:
    """Full-register Majorana operator gamma^side_i as a sparse matrix.

    Acts as identity on the message and ancilla qubits.  Hermitian and
    unitary; opposite-side operators anticommute through the interleaved
    Z string on the left block.
    """
    if side not in ("L", "R"):
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    if not 0 <= i < layout.n_majorana:
        raise ValueError(
            f"majorana index {i} out of range for N={layout.n_majorana}"
        )
    nb = layout.n_side_qubits
    phase, x, z = majorana_string(nb, i)
    if side == "L":
        # left block occupies the higher chain bits: shift by nb (right block)
        x <<= nb
        z <<= nb
    else:
        # Z on every left-block qubit
        z |= ((1 << nb) - 1) << nb
    full = string_matrix((phase, x, z), layout.n_chain_qubits, sparse=True)
    mat = sp.kron(sp.identity(4, format="csr"), full, format="csr")
    return OperatorMatrix(mat, "register", layout, hermitian=True, unitary=True)


def build_fermion(layout: RegisterLayout, i: int) -> OperatorMatrix:
    """Nonlocal annihilation operator c_i = (gamma^L_i + i gamma^R_i)/2."""
    gl = build_majorana(layout, "L", i)
    gr = build_majorana(layout, "R", i)
    mat = (gl.mat + 1j * gr.mat) * 0.5
    return OperatorMatrix(mat.tocsr(), "register", layout)


def apply_block_qubit_gate(
    t: np.ndarray, axis: int, qubit: int, gate: np.ndarray, n_side_qubits: int
) -> np.ndarray:
    """Apply a 2x2 gate to one qubit of a boundary axis of a state tensor.

    ``t`` has a boundary axis of length dim_side at position ``axis``;
    ``qubit`` counts from the most significant bit of that axis.
    """
    t = np.moveaxis(t, axis, -1)
    lead = t.shape[:-1]
    hi = 1 << qubit
    lo = 1 << (n_side_qubits - 1 - qubit)
    r = t.reshape(lead + (hi, 2, lo))
    out = np.einsum("ij,...ajb->...aib", gate, r)
    out = out.reshape(lead + (hi * 2 * lo,))
    return np.moveaxis(out, -1, axis)
