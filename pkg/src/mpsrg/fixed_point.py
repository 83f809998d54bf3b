"""Fixed-point states: nearest-neighbor entangled pairs for normal tensors,
and GHZ-like branch superpositions with length-dependent coefficients for
block-structured non-normal tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchOverlap,
    NotPositive,
    ShapeMismatch,
    ValidationError,
)
from .tensors import (
    Boundary,
    MpsChain,
    SiteTensor,
    analyze_tensor,
    psd_sqrt,
)


def pair_state(rho: np.ndarray) -> np.ndarray:
    """Entangled pair ``(1 (x) sqrt(rho)) sum_i |ii>``, normalized.

    The first tensor factor is the right half of a bond, the second the left
    half of the next site; the marginal on the second factor equals ``rho``
    (and ``rho`` transposed on the first).
    """
    rho = np.asarray(rho, dtype=np.complex128)
    D = rho.shape[0]
    if rho.shape != (D, D):
        raise ShapeMismatch("density matrix must be square")
    tr = np.trace(rho).real
    if tr <= 0:
        raise NotPositive("density matrix must have positive trace")
    root = psd_sqrt(rho / tr)
    vec = np.zeros(D * D, dtype=np.complex128)
    for i in range(D):
        vec[i * D:(i + 1) * D] = root[:, i]
    nrm = np.linalg.norm(vec)
    return vec / nrm


@dataclass(frozen=True)
class CanonicalDecomposition:
    """Block structure of a non-normal tensor: per-branch multiplier lists and
    normal branch tensors.  Branch j occupies a coordinate block of size
    ``len(multipliers[j]) * branch.D_l`` in the full virtual space.
    """

    branches: tuple[tuple[tuple[complex, ...], SiteTensor], ...]

    def __post_init__(self):
        if not self.branches:
            raise ValidationError("decomposition needs at least one branch")
        mags = []
        for mus, tensor in self.branches:
            if not mus:
                raise ValidationError("every branch needs at least one multiplier")
            if not tensor.square_bonded:
                raise ShapeMismatch("branch tensors must be square-bonded")
            for mu in mus:
                if abs(mu) > 1.0 + 1e-10:
                    raise ValidationError(f"multiplier magnitude {abs(mu)} exceeds 1")
            mags.extend(abs(mu) for mu in mus)
        if max(mags) < 1.0 - 1e-10:
            raise ValidationError("at least one multiplier must have magnitude 1")

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(mus) for mus, _ in self.branches)

    @property
    def full_bond_dim(self) -> int:
        return sum(len(mus) * t.D_l for mus, t in self.branches)


def branch_weights(decomp: CanonicalDecomposition, n_sites: int) -> np.ndarray:
    """Per-branch chain weights sum_k mu_k^N, decaying multipliers included.

    Dropping the sub-unimodular contributions would add an avoidable error at
    finite length, so they are retained.
    """
    if n_sites < 1:
        raise ValidationError("site count must be >= 1")
    return np.array(
        [sum(complex(mu) ** n_sites for mu in mus) for mus, _ in decomp.branches],
        dtype=np.complex128,
    )


def branch_coefficients(decomp: CanonicalDecomposition, n_sites: int) -> np.ndarray:
    """Normalized superposition coefficients beta_j / sqrt(sum |beta|^2)."""
    beta = branch_weights(decomp, n_sites)
    scale = math.sqrt(float(np.sum(np.abs(beta) ** 2)))
    if scale == 0:
        raise ValidationError("all branch weights vanish at this length")
    return beta / scale


@dataclass(frozen=True)
class FixedPointState:
    """Superposition of branch pair products over the full virtual pair space.

    ``pairs[j]`` is the branch-j pair vector embedded at its coordinate block
    (mutually orthogonal across branches); ``coefficients[j]`` the
    length-dependent weight.  ``branch_count == 1`` is the plain
    nearest-neighbor pair product of a normal tensor.
    """

    pairs: tuple[np.ndarray, ...]
    coefficients: np.ndarray
    multipliers: tuple[tuple[complex, ...], ...]
    block_sizes: tuple[int, ...]
    bond_dim: int
    n_sites: int
    blocking: int

    @property
    def branch_count(self) -> int:
        return len(self.pairs)

    @property
    def n_blocks(self) -> int:
        return self.n_sites // self.blocking


def _validate_gauged(tensor: SiteTensor, tag: str) -> None:
    gram = np.einsum("ijk,ijl->kl", tensor.data.conj(), tensor.data)
    if np.linalg.norm(gram - np.eye(tensor.D_r)) > 1e-8 * tensor.D_r:
        raise ValidationError(f"{tag} is not in the left-canonical gauge")


def nonnormal_fixed_point(decomp: CanonicalDecomposition, n_sites: int,
                          blocking: int) -> FixedPointState:
    """Construct the branch-superposed pair state for a block-structured tensor.

    Each branch must individually be a normal tensor in the left-canonical
    gauge.  The branch pair is placed at the branch's leading-multiplier slot
    of the full virtual space, which makes the branch pair vectors exactly
    orthogonal; overlapping branches signal invalid input.
    """
    if n_sites < 1 or blocking < 1 or n_sites % blocking != 0:
        raise ValidationError("need blocking >= 1 dividing the site count")
    D_full = decomp.full_bond_dim
    pairs = []
    offset = 0
    for mus, tensor in decomp.branches:
        report = analyze_tensor(tensor)
        if not report.is_normal:
            raise ValidationError("branch tensor fails the normality test")
        _validate_gauged(tensor, "branch tensor")
        slot = int(np.argmax([abs(mu) for mu in mus]))
        D_j = tensor.D_l
        local = pair_state(report.rho)
        embedded = np.zeros(D_full * D_full, dtype=np.complex128)
        base = offset + slot * D_j
        for a in range(D_j):
            for b in range(D_j):
                embedded[(base + a) * D_full + (base + b)] = local[a * D_j + b]
        pairs.append(embedded)
        offset += len(mus) * D_j
    for j in range(len(pairs)):
        for jp in range(j + 1, len(pairs)):
            if abs(np.vdot(pairs[j], pairs[jp])) > 1e-10:
                raise BranchOverlap(
                    f"branch pairs {j} and {jp} overlap; decomposition invalid"
                )
    coeffs = branch_coefficients(decomp, n_sites)
    return FixedPointState(
        pairs=tuple(pairs),
        coefficients=coeffs,
        multipliers=tuple(tuple(complex(m) for m in mus) for mus, _ in decomp.branches),
        block_sizes=decomp.block_sizes,
        bond_dim=D_full,
        n_sites=n_sites,
        blocking=blocking,
    )


def normal_fixed_point(rho: np.ndarray, n_sites: int, blocking: int) -> FixedPointState:
    """Single-branch pair product for a normal tensor with fixed point rho."""
    if n_sites < 1 or blocking < 1 or n_sites % blocking != 0:
        raise ValidationError("need blocking >= 1 dividing the site count")
    D = np.asarray(rho).shape[0]
    return FixedPointState(
        pairs=(pair_state(rho),),
        coefficients=np.array([1.0 + 0.0j]),
        multipliers=((1.0 + 0.0j,),),
        block_sizes=(1,),
        bond_dim=D,
        n_sites=n_sites,
        blocking=blocking,
    )


def fixed_point_chain(state: FixedPointState) -> MpsChain:
    """The pair superposition as an explicit periodic MPS.

    One chain site per block bond, physical dimension D^2; the bond carries
    the branch label, coefficients are absorbed into the last site.
    """
    b = state.branch_count
    D2 = state.bond_dim ** 2
    bulk = np.zeros((D2, b, b), dtype=np.complex128)
    for j, pair in enumerate(state.pairs):
        bulk[:, j, j] = pair
    last = bulk.copy()
    for j, alpha in enumerate(state.coefficients):
        last[:, j, j] *= alpha
    blocks = state.n_blocks
    if blocks == 1:
        return MpsChain((SiteTensor(last),), Boundary.PERIODIC)
    sites = (SiteTensor(bulk),) * (blocks - 1) + (SiteTensor(last),)
    return MpsChain(sites, Boundary.PERIODIC)


def prepared_chain(isometry: np.ndarray, state: FixedPointState) -> MpsChain:
    """Chain generated by threading every pair through the block isometry.

    ``isometry`` maps the vectorized virtual pair into the blocked physical
    space.  The output is a periodic MPS whose bond carries (branch, bond
    level); for a single branch this is exactly the fixed-point-replaced
    blocked tensor's chain.
    """
    isometry = np.asarray(isometry, dtype=np.complex128)
    D = state.bond_dim
    if isometry.shape[1] != D * D:
        raise ShapeMismatch("isometry input must be the vectorized virtual pair")
    d_block = isometry.shape[0]
    b = state.branch_count
    # W_j[I, a, a'] = sum_b V[I, (a, b)] omega_j[(b, a')]
    v3 = isometry.reshape(d_block, D, D)
    bulk = np.zeros((d_block, b * D, b * D), dtype=np.complex128)
    last = np.zeros_like(bulk)
    for j, pair in enumerate(state.pairs):
        omega = pair.reshape(D, D)
        w = np.einsum("Iab,bc->Iac", v3, omega)
        sl = slice(j * D, (j + 1) * D)
        bulk[:, sl, sl] = w
        last[:, sl, sl] = w * state.coefficients[j]
    blocks = state.n_blocks
    if blocks == 1:
        return MpsChain((SiteTensor(last),), Boundary.PERIODIC)
    sites = (SiteTensor(bulk),) * (blocks - 1) + (SiteTensor(last),)
    return MpsChain(sites, Boundary.PERIODIC)
