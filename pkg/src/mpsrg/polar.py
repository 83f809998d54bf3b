"""Polar splits of blocked tensors and unitary embeddings of isometries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InjectivityImpossible,
    NumericalFailure,
    ShapeMismatch,
    ValidationError,
)
from .tensors import SiteTensor

#: Relative singular-value cutoff for rank decisions and pseudo-inverses.
SVD_CUTOFF = 1e-12


@dataclass(frozen=True)
class IsometryFactor:
    """A rectangular matrix with orthonormal columns (rows >= cols).

    ``support`` optionally records the ordered register indices the factor
    acts on once placed in a circuit.
    """

    matrix: np.ndarray
    support: tuple[int, ...] = ()

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2:
            raise ShapeMismatch("isometry factor must be a matrix")
        if mat.shape[0] < mat.shape[1]:
            raise ShapeMismatch(
                f"isometry needs rows >= cols, got {mat.shape}"
            )
        gram = mat.conj().T @ mat
        if np.linalg.norm(gram - np.eye(mat.shape[1])) > 1e-10 * max(1, mat.shape[1]):
            raise ValidationError("columns are not orthonormal to 1e-10")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "support", tuple(self.support))

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class PolarSplit:
    """Polar factorization B = V P of a matrixized blocked tensor.

    ``v`` spans rank columns only, so ``v_dag v`` equals the projector onto
    the image of ``positive`` (identity when the block is injective).
    """

    v: np.ndarray                 # d^q x D_l*D_r, zero on the kernel
    positive: np.ndarray          # (D_l*D_r) square, Hermitian PSD
    rank: int
    projector: np.ndarray         # projector onto the image of positive
    isometry: IsometryFactor      # rank-restricted orthonormal factor
    support_basis: np.ndarray     # (D_l*D_r) x rank orthonormal basis

    @property
    def injective(self) -> bool:
        return self.rank == self.positive.shape[0]

    def positive_pinv(self) -> np.ndarray:
        """Pseudo-inverse of the positive part on its support."""
        vals, vecs = np.linalg.eigh(0.5 * (self.positive + self.positive.conj().T))
        cutoff = SVD_CUTOFF * max(vals.max(), 0.0)
        inv = np.where(vals > cutoff, 1.0 / np.where(vals > cutoff, vals, 1.0), 0.0)
        return (vecs * inv) @ vecs.conj().T


def polar_split(blocked: SiteTensor, cutoff: float = SVD_CUTOFF) -> PolarSplit:
    """Split a blocked tensor into isometry times positive part via SVD.

    The matrixization (physical rows, vectorized virtual pair columns) is
    decomposed as ``U S W_dag``; singular values below ``cutoff * s_max``
    define the rank, ``V = U_r W_r_dag`` and ``P = W_r S_r W_r_dag``.
    """
    mat = blocked.matrix()
    rows, cols = mat.shape
    if rows < cols:
        raise InjectivityImpossible(
            f"physical dimension {rows} is smaller than the virtual pair space "
            f"{cols}; block more sites first"
        )
    try:
        u, s, wh = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD failed: {exc}") from exc
    if s.size == 0 or s[0] == 0.0:
        raise NumericalFailure("blocked tensor is identically zero")
    rank = int(np.sum(s > cutoff * s[0]))
    u_r, s_r, w_r = u[:, :rank], s[:rank], wh[:rank].conj().T
    v = u_r @ w_r.conj().T
    positive = (w_r * s_r) @ w_r.conj().T
    projector = w_r @ w_r.conj().T
    return PolarSplit(
        v=v,
        positive=positive,
        rank=rank,
        projector=projector,
        isometry=IsometryFactor(u_r),
        support_basis=w_r,
    )


def complete_unitary(columns: np.ndarray, dim: int, col_positions: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns at given positions to a full unitary.

    Remaining columns are filled deterministically by Gram-Schmidt against
    the standard basis in index order.
    """
    k = columns.shape[1]
    if columns.shape[0] != dim or k > dim or len(col_positions) != k:
        raise DimensionMismatch("column block does not fit the target unitary")
    u = np.zeros((dim, dim), dtype=np.complex128)
    u[:, col_positions] = columns
    basis = [columns[:, i] for i in range(k)]
    free = [c for c in range(dim) if c not in set(int(p) for p in col_positions)]
    cand = 0
    for col in free:
        while True:
            if cand >= dim:
                raise NumericalFailure("ran out of completion candidates")
            vec = np.zeros(dim, dtype=np.complex128)
            vec[cand] = 1.0
            cand += 1
            for b in basis:
                vec -= b * (b.conj() @ vec)
            for b in basis:  # second pass for numerical orthogonality
                vec -= b * (b.conj() @ vec)
            nrm = np.linalg.norm(vec)
            if nrm > 1e-7:
                vec /= nrm
                break
        basis.append(vec)
        u[:, col] = vec
    return u


def embed_isometry(matrix: np.ndarray, reg_dims: tuple[int, ...] | None = None,
                   ancilla: tuple[bool, ...] | None = None) -> tuple[np.ndarray, tuple[bool, ...]]:
    """Complete an isometry into a square unitary over explicit registers.

    Without ``reg_dims`` the input space is a single register and one leading
    ancilla register of dimension ``out_dim // in_dim`` is assumed, so
    ``U (|0> (x) x) = V x``.  With ``reg_dims``/``ancilla`` the unitary acts
    on the row-major product of the given registers and equals the isometry
    on the subspace where every ancilla register is zero.

    Returns the unitary together with the per-register ancilla flags.
    """
    mat = np.asarray(matrix, dtype=np.complex128)
    if mat.ndim != 2:
        raise ShapeMismatch("isometry must be a matrix")
    out_dim, in_dim = mat.shape
    if reg_dims is None:
        if in_dim == 0 or out_dim % in_dim != 0:
            raise DimensionMismatch(
                f"output dimension {out_dim} is not a multiple of input {in_dim}"
            )
        ratio = out_dim // in_dim
        if ratio == 1:
            reg_dims, ancilla = (in_dim,), (False,)
        else:
            reg_dims, ancilla = (ratio, in_dim), (True, False)
    if ancilla is None or len(ancilla) != len(reg_dims):
        raise DimensionMismatch("need one ancilla flag per register")
    total = int(np.prod(reg_dims))
    live = int(np.prod([d for d, a in zip(reg_dims, ancilla) if not a])) if any(
        not a for a in ancilla) else 1
    if total != out_dim or live != in_dim:
        raise DimensionMismatch(
            f"registers {reg_dims} with ancillas {ancilla} do not embed a "
            f"{out_dim}x{in_dim} isometry"
        )
    gram = mat.conj().T @ mat
    if np.linalg.norm(gram - np.eye(in_dim)) > 1e-9 * max(1, in_dim):
        raise ValidationError("matrix columns are not orthonormal")

    # Row-major index of each input basis state once ancillas are pinned to 0.
    positions = np.zeros(in_dim, dtype=np.int64)
    strides = np.ones(len(reg_dims), dtype=np.int64)
    for axis in range(len(reg_dims) - 2, -1, -1):
        strides[axis] = strides[axis + 1] * reg_dims[axis + 1]
    live_axes = [a for a, flag in enumerate(ancilla) if not flag]
    for basis_index in range(in_dim):
        rem = basis_index
        pos = 0
        for axis in reversed(live_axes):
            rem, digit = divmod(rem, reg_dims[axis])
            pos += digit * strides[axis]
        positions[basis_index] = pos
    unitary = complete_unitary(mat, total, positions)
    return unitary, tuple(ancilla)
