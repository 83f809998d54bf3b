"""Lower blocked MPS tensors into chains and trees of constant-size isometries.

The blocked tensor factors as isometry times positive part; replacing the
positive part by its fixed-point version turns the chain into isometries
acting on nearest-neighbor entangled pairs.  Two exact factorizations of the
block isometry into local pieces are provided: a sequential sweep of SVDs and
a binary tree of two-site polar splits, each level of which halves the
correlation length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InjectivityImpossible,
    RankCollapse,
    ShapeMismatch,
    ValidationError,
)
from .polar import SVD_CUTOFF, IsometryFactor, PolarSplit, polar_split
from .tensors import (
    MpsChain,
    SiteTensor,
    TransferMatrix,
    block,
    pair_swap,
    psd_sqrt,
    site_tensor_from_matrix,
    uniform_chain,
)


def fixed_point_positive(rho: np.ndarray, right_dim: int | None = None) -> np.ndarray:
    """Fixed-point replacement of a positive part: sqrt(rho) on the left leg.

    Acting on the vectorized pair ``(j, k)`` this is ``sqrt(rho) (x) 1``; a
    chain of tensors rebuilt with it is exactly a product of entangled pairs
    ``(1 (x) sqrt(rho)) sum_i |ii>`` threaded through the block isometries.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    D = rho.shape[0]
    if rho.shape != (D, D):
        raise ShapeMismatch("density matrix must be square")
    if right_dim is None:
        right_dim = D
    return np.kron(psd_sqrt(rho), np.eye(right_dim))


def approx_block_tensor(split: PolarSplit, rho: np.ndarray) -> SiteTensor:
    """Blocked tensor with its positive part replaced by the fixed point.

    ``rho`` must be positive semidefinite with unit trace.  Over M blocks the
    returned tensor generates exactly the state obtained by applying the block
    isometry to every nearest-neighbor pair; for injective blocks that chain
    is normalized at any length.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-9:
        raise ValidationError(f"rho must have unit trace, got {tr}")
    pair_dim = split.positive.shape[0]
    D = rho.shape[0]
    if D * D != pair_dim:
        raise ShapeMismatch(f"rho of dimension {D} does not match pair space {pair_dim}")
    mat = split.v @ fixed_point_positive(rho)
    return site_tensor_from_matrix(mat, split.v.shape[0], D, D)


def blocked_gram(transfer: TransferMatrix, q: int) -> np.ndarray:
    """Gram matrix of the q-site blocked tensor, without forming the block.

    The pair-indexed Gram matrix is the inner-index swap of the q-th power of
    the transfer matrix, so only D^2 x D^2 arithmetic is needed even for
    blocking ranges far beyond any explicit tensor budget.
    """
    if q < 1:
        raise ValidationError("blocking range must be >= 1")
    D = transfer.bond_dim
    power = np.linalg.matrix_power(transfer.matrix, q)
    gram = pair_swap(power, (D, D, D, D))
    return 0.5 * (gram + gram.conj().T)


def blocked_positive(transfer: TransferMatrix, q: int) -> np.ndarray:
    """Positive part of the q-site polar split, computed in pair space."""
    return psd_sqrt(blocked_gram(transfer, q))


def positive_site_tensor(positive: np.ndarray, D: int) -> SiteTensor:
    """Reinterpret a positive part as a two-leg site tensor (physical dim D^2).

    Its transfer matrix equals that of the blocked tensor it came from, which
    is what makes iterated two-site coarse graining exact.
    """
    positive = np.asarray(positive, dtype=np.complex128)
    if positive.shape != (D * D, D * D):
        raise ShapeMismatch("positive part must be (D^2, D^2)")
    return site_tensor_from_matrix(positive, D * D, D, D)


def _pseudo_inverse_psd(mat: np.ndarray, cutoff: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    pcut = cutoff * max(vals.max(), 0.0)
    safe = np.where(vals > pcut, vals, 1.0)
    inv = np.where(vals > pcut, 1.0 / safe, 0.0)
    return (vecs * inv) @ vecs.conj().T


# ---------------------------------------------------------------------------
# Sequential factorization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequentialFactors:
    """Local factors whose ordered contraction rebuilds a block isometry.

    ``factors[m]`` emits physical site ``m+1`` of the block.  The entry at
    ``core_index`` carries the block's virtual-pair input leg; for injective
    blocks it is itself an isometry (checked by ``core_isometric``).
    ``ranks[m]`` is the bond dimension after site ``m+1``.
    """

    sweep: tuple[IsometryFactor, ...]
    core: np.ndarray
    ranks: tuple[int, ...]
    core_index: int
    d: int
    pair_dim: int

    @property
    def q(self) -> int:
        return len(self.sweep) + 1

    @property
    def core_isometric(self) -> bool:
        gram = self.core.conj().T @ self.core
        return bool(
            np.linalg.norm(gram - np.eye(gram.shape[0])) <= 1e-10 * max(1, gram.shape[0])
        )

    def core_factor(self) -> IsometryFactor:
        """Core as a proper isometry (injective blocks only)."""
        return IsometryFactor(self.core)


def _bulk_site(tensor: SiteTensor) -> np.ndarray:
    """Block-isometry site tensor: passthrough wire on the leading bond slot."""
    d, D = tensor.d, tensor.D_l
    arr = np.einsum("ab,imk->iambk", np.eye(D), tensor.data)
    return arr.reshape(d, D * D, D * D)


def _close_left(arr: np.ndarray, D: int) -> np.ndarray:
    """Trace the (passthrough, bond) pair at the left edge of the block."""
    d = arr.shape[0]
    return np.einsum("ibbk->ik", arr.reshape(d, D, D, arr.shape[2]))[:, None, :]


def sequential_decompose(tensor: SiteTensor, q: int, positive: np.ndarray,
                         cutoff: float = SVD_CUTOFF) -> SequentialFactors:
    """Factor the q-site block isometry into a staircase of local isometries.

    ``positive`` is the positive part of the block's polar split; its
    pseudo-inverse is absorbed into the rightmost site, then a left-to-right
    SVD sweep extracts one isometric factor per site.  Every intermediate
    bond dimension is at most D^2 and the final factor, which carries the
    virtual-pair input, is automatically an isometry for injective blocks.
    """
    if q < 1:
        raise ValidationError("blocking range must be >= 1")
    if not tensor.square_bonded:
        raise ShapeMismatch("sequential factorization needs a square-bonded tensor")
    d, D = tensor.d, tensor.D_l
    pair_dim = D * D
    positive = np.asarray(positive, dtype=np.complex128)
    if positive.shape != (pair_dim, pair_dim):
        raise ShapeMismatch("positive part has the wrong pair dimension")
    pinv = _pseudo_inverse_psd(positive, cutoff)

    bulk = _bulk_site(tensor)
    # rightmost site: route the physical leg into the pseudo-inverse, leaving
    # the virtual-pair output dangling
    core_site = np.einsum("imk,bkp->ibmp", tensor.data,
                          pinv.reshape(D, D, pair_dim)).reshape(d, pair_dim, pair_dim)

    tensors: list[np.ndarray] = []
    for m in range(1, q + 1):
        arr = core_site if m == q else bulk
        if m == 1:
            arr = _close_left(arr, D)
        tensors.append(arr)

    sweep_mats: list[np.ndarray] = []
    ranks: list[int] = []
    carry = np.eye(tensors[0].shape[1])
    for arr in tensors[:-1]:
        m = np.einsum("ab,ibk->aik", carry, arr)
        m = m.reshape(m.shape[0] * m.shape[1], m.shape[2])
        u, s, wh = np.linalg.svd(m, full_matrices=False)
        rank = int(np.sum(s > cutoff * s[0])) if s.size and s[0] > 0 else 0
        if rank == 0:
            raise RankCollapse("sweep step retained no singular values")
        sweep_mats.append(u[:, :rank])
        ranks.append(rank)
        carry = s[:rank, None] * wh[:rank]
    last = np.einsum("ab,ibk->aik", carry, tensors[-1])
    core = last.reshape(last.shape[0] * last.shape[1], last.shape[2])

    return SequentialFactors(
        sweep=tuple(IsometryFactor(f) for f in sweep_mats),
        core=core,
        ranks=tuple(ranks),
        core_index=q - 1,
        d=d,
        pair_dim=pair_dim,
    )


def recompose_sequential(factors: SequentialFactors) -> np.ndarray:
    """Contract the staircase back into the full block isometry matrix.

    Rows are the blocked physical index (first site most significant),
    columns the vectorized virtual pair.
    """
    mats = [f.matrix for f in factors.sweep] + [factors.core]
    acc = mats[0]  # (d, r1): first site has a trivial left bond
    for mat in mats[1:]:
        r_prev = acc.shape[1]
        step = mat.reshape(r_prev, mat.shape[0] // r_prev, mat.shape[1])
        acc = np.einsum("pa,adc->pdc", acc, step)
        acc = acc.reshape(acc.shape[0] * acc.shape[1], acc.shape[2])
    return acc


# ---------------------------------------------------------------------------
# Tree factorization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeLevel:
    """One coarse-graining level: the extracted isometry and the positive
    remainder whose correlation length is half the previous level's."""

    isometry: np.ndarray      # out_dim x D^2 (zero on the kernel)
    positive: np.ndarray      # D^2 x D^2
    rank: int


@dataclass(frozen=True)
class TreeDecomposition:
    """Binary tree of two-site polar splits.

    ``levels[0]`` splits the two-site block of the (possibly pre-blocked)
    input tensor; ``levels[m]`` splits two copies of the previous positive
    remainder.  The tree covers ``pre_block * 2**depth`` original sites.
    """

    levels: tuple[TreeLevel, ...]
    pre_block: int
    d: int
    D: int

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def sites_covered(self) -> int:
        return self.pre_block * (2 ** self.depth)

    @property
    def residual_positive(self) -> np.ndarray:
        return self.levels[-1].positive

    def level_tensor(self, level: int) -> SiteTensor:
        """Positive remainder of a level as a site tensor (for spectra)."""
        if not 0 <= level < self.depth:
            raise ValidationError(f"level must be in [0, {self.depth})")
        return positive_site_tensor(self.levels[level].positive, self.D)


def tree_decompose(tensor: SiteTensor, depth: int, pre_block: bool = True,
                   cutoff: float = SVD_CUTOFF) -> TreeDecomposition:
    """Iterate two-site blocking and polar splitting ``depth`` times.

    If the two-site physical space cannot host the pair space (d^2 < D^2) and
    ``pre_block`` is enabled, the minimal number of sites with d^q >= D^2 is
    grouped first; otherwise the first split raises ``InjectivityImpossible``.
    """
    if depth < 1:
        raise ValidationError("tree depth must be >= 1")
    if not tensor.square_bonded:
        raise ShapeMismatch("tree factorization needs a square-bonded tensor")
    d, D = tensor.d, tensor.D_l
    q0 = 1
    base = tensor
    if d * d < D * D:
        if not pre_block:
            raise InjectivityImpossible(
                f"two-site physical space {d * d} cannot host the pair space {D * D}"
            )
        while d**q0 < D * D:
            q0 += 1
        base = block(tensor, q0)

    levels: list[TreeLevel] = []
    current = base
    for _ in range(depth):
        split = polar_split(block(current, 2), cutoff=cutoff)
        levels.append(TreeLevel(isometry=split.v, positive=split.positive,
                                rank=split.rank))
        current = positive_site_tensor(split.positive, D)
    return TreeDecomposition(levels=tuple(levels), pre_block=q0, d=d, D=D)


def recompose_tree(tree: TreeDecomposition) -> np.ndarray:
    """Contract the tree into the full block isometry (small depths only)."""
    acc = tree.levels[0].isometry
    for level in tree.levels[1:]:
        acc = np.kron(acc, acc) @ level.isometry
    return acc


# ---------------------------------------------------------------------------
# Chain constructors used by verification
# ---------------------------------------------------------------------------


def blocked_chain(tensor: SiteTensor, q: int, blocks: int) -> MpsChain:
    """Periodic chain of the q-site blocked tensor over the given block count."""
    return uniform_chain(block(tensor, q), blocks)


def replaced_chain(tensor: SiteTensor, q: int, blocks: int,
                   rho: np.ndarray) -> MpsChain:
    """Periodic chain of the fixed-point-replaced blocked tensor."""
    split = polar_split(block(tensor, q))
    return uniform_chain(approx_block_tensor(split, rho), blocks)
