"""Core MPS machinery: site tensors, transfer-matrix spectra, gauge fixing,
blocking, and exact overlap/error evaluation.

Index conventions (fixed repo-wide):

* A site tensor is stored as ``data[i, j, k]`` with ``i`` the physical index,
  ``j`` the left virtual index and ``k`` the right virtual index.
* A virtual pair ``(j, k)`` vectorizes to ``j * D_r + k``, i.e. plain
  row-major flattening.  In a transfer matrix the conjugated (bra) leg is the
  leading factor of the Kronecker pair.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IllConditioned,
    NonSquareBond,
    NotNormal,
    NumericalFailure,
    ShapeMismatch,
    SizeOverflow,
    TooLarge,
    ValidationError,
)

#: Largest number of complex entries a blocked tensor may occupy.
ELEMENT_BUDGET = 1 << 26

#: Relative tolerance for calling two leading eigenvalue magnitudes degenerate.
DEGENERACY_TOL = 1e-10

#: Condition-number ceiling for gauge transformations.
GAUGE_COND_LIMIT = 1e12

#: Hilbert-space cap (in dimension) for dense chain states.
DENSE_STATE_CAP = 1 << 22


class Boundary(enum.Enum):
    """Chain closure: periodic trace or open boundary vectors."""

    PERIODIC = "periodic"
    OPEN = "open"


@dataclass(frozen=True)
class SiteTensor:
    """One MPS site tensor ``A[i, j, k]`` (physical, left bond, right bond)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 3:
            raise ShapeMismatch(f"site tensor must be rank 3, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ShapeMismatch(f"all dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValidationError("site tensor entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def D_l(self) -> int:
        return self.data.shape[1]

    @property
    def D_r(self) -> int:
        return self.data.shape[2]

    @property
    def square_bonded(self) -> bool:
        return self.D_l == self.D_r

    def matrix(self) -> np.ndarray:
        """Matrixization: physical index as rows, vectorized pair as columns."""
        return self.data.reshape(self.d, self.D_l * self.D_r)

    def fingerprint(self) -> str:
        digest = hashlib.sha1(np.ascontiguousarray(self.data).tobytes())
        return digest.hexdigest()[:12]

    def __repr__(self):  # keep reprs short; arrays are big
        return f"SiteTensor(d={self.d}, D_l={self.D_l}, D_r={self.D_r})"


def site_tensor_from_matrix(mat: np.ndarray, d: int, D_l: int, D_r: int) -> SiteTensor:
    """Inverse of :meth:`SiteTensor.matrix` under the fixed pair vectorization."""
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.shape != (d, D_l * D_r):
        raise ShapeMismatch(f"expected shape {(d, D_l * D_r)}, got {mat.shape}")
    return SiteTensor(mat.reshape(d, D_l, D_r))


@dataclass(frozen=True)
class MpsChain:
    """A 1D chain of site tensors with a trace or open-boundary closure.

    ``sites`` may be shorter than ``n_sites`` for periodic chains, in which
    case the pattern tiles the chain (``n_sites`` must then be a multiple of
    ``len(sites)``); norms and overlaps use repeated squaring instead of
    walking all sites.
    """

    sites: tuple[SiteTensor, ...]
    boundary: Boundary = Boundary.PERIODIC
    n_sites: int | None = None

    def __post_init__(self):
        sites = tuple(self.sites)
        if not sites:
            raise ShapeMismatch("chain needs at least one site tensor")
        object.__setattr__(self, "sites", sites)
        n = self.n_sites if self.n_sites is not None else len(sites)
        object.__setattr__(self, "n_sites", n)
        if n < len(sites) or n % len(sites) != 0:
            raise ShapeMismatch(
                f"n_sites={n} must be a positive multiple of the {len(sites)}-site pattern"
            )
        if n != len(sites) and self.boundary is not Boundary.PERIODIC:
            raise ShapeMismatch("tiled chains are only supported with periodic boundary")
        for a, b in zip(sites, sites[1:]):
            if a.D_r != b.D_l:
                raise ShapeMismatch(
                    f"bond mismatch: D_r={a.D_r} does not match next D_l={b.D_l}"
                )
        if self.boundary is Boundary.PERIODIC:
            if sites[-1].D_r != sites[0].D_l:
                raise ShapeMismatch("periodic closure needs last D_r == first D_l")

    @property
    def tiled(self) -> bool:
        return self.n_sites != len(self.sites)

    def explicit(self) -> "MpsChain":
        """Untiled copy with one stored tensor per site."""
        if not self.tiled:
            return self
        reps = self.n_sites // len(self.sites)
        return MpsChain(self.sites * reps, self.boundary)

    def site(self, n: int) -> SiteTensor:
        return self.sites[n % len(self.sites)]

    def physical_dims(self) -> tuple[int, ...]:
        reps = self.n_sites // len(self.sites)
        return tuple(t.d for t in self.sites) * reps


def uniform_chain(tensor: SiteTensor, n_sites: int,
                  boundary: Boundary = Boundary.PERIODIC) -> MpsChain:
    """Chain repeating one square-bonded tensor on every site."""
    if not tensor.square_bonded:
        raise NonSquareBond("uniform chains need a square-bonded tensor")
    if boundary is Boundary.PERIODIC:
        return MpsChain((tensor,), boundary, n_sites)
    return MpsChain((tensor,) * n_sites, boundary)


@dataclass(frozen=True)
class TransferMatrix:
    """Transfer matrix sum_i conj(A^i) (x) A^i of a square-bonded tensor."""

    matrix: np.ndarray
    source: str = ""

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ShapeMismatch(f"transfer matrix must be square, got {mat.shape}")
        D = math.isqrt(mat.shape[0])
        if D * D != mat.shape[0]:
            raise ShapeMismatch("transfer matrix side must be a perfect square")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def bond_dim(self) -> int:
        return math.isqrt(self.matrix.shape[0])


@dataclass(frozen=True)
class SpectralReport:
    """Eigendata of a transfer matrix.

    ``eigenvalues`` are sorted by descending magnitude and normalized so the
    leading magnitude is 1; ``leading`` keeps the raw leading eigenvalue.
    ``rho`` is the leading right eigenvector reshaped to a Hermitized,
    trace-one matrix, ``left_fixed`` its left counterpart.  ``xi`` is the
    correlation length from the subleading magnitude.
    """

    eigenvalues: np.ndarray
    leading: complex
    rho: np.ndarray
    left_fixed: np.ndarray
    xi: float
    is_normal: bool
    degeneracy: int
    tol: float = DEGENERACY_TOL


def transfer_matrix(tensor: SiteTensor) -> TransferMatrix:
    """Build the transfer matrix of a square-bonded site tensor."""
    if not tensor.square_bonded:
        raise NonSquareBond(
            f"transfer matrix needs D_l == D_r, got {tensor.D_l} != {tensor.D_r}"
        )
    D = tensor.D_l
    mat = np.einsum("ijk,ilm->jlkm", tensor.data.conj(), tensor.data)
    return TransferMatrix(mat.reshape(D * D, D * D), source=tensor.fingerprint())


def mixed_transfer(bra: SiteTensor, ket: SiteTensor) -> np.ndarray:
    """Mixed transfer matrix sum_i conj(bra^i) (x) ket^i as a dense array."""
    if bra.d != ket.d:
        raise ShapeMismatch(f"physical dims differ: {bra.d} != {ket.d}")
    mat = np.einsum("ijk,ilm->jlkm", bra.data.conj(), ket.data)
    return mat.reshape(bra.D_l * ket.D_l, bra.D_r * ket.D_r)


def pair_swap(mat: np.ndarray, dims: tuple[int, int, int, int]) -> np.ndarray:
    """Swap the inner indices of a doubly-indexed matrix.

    Maps ``M[(a,b),(c,d)] -> M'[(a,c),(b,d)]``; with all four dimensions
    equal this is the involution connecting a transfer matrix to the Gram
    matrix of the underlying matrixized tensor.
    """
    a, b, c, d = dims
    if mat.shape != (a * b, c * d):
        raise ShapeMismatch(f"expected shape {(a * b, c * d)}, got {mat.shape}")
    return mat.reshape(a, b, c, d).transpose(0, 2, 1, 3).reshape(a * c, b * d)


def _phase_fix_hermitize(mat: np.ndarray) -> np.ndarray:
    """Rotate a matrix by a global phase to make its trace real positive,
    then Hermitize.  Eigensolvers return eigenvectors up to phase."""
    tr = np.trace(mat)
    if abs(tr) > 1e-14:
        mat = mat * (tr.conjugate() / abs(tr))
    return 0.5 * (mat + mat.conj().T)


def spectral_analyze(transfer: TransferMatrix, tol: float = DEGENERACY_TOL) -> SpectralReport:
    """Full eigendecomposition of a transfer matrix with a normality verdict.

    The tensor is declared normal when exactly one eigenvalue magnitude lies
    within ``tol`` (relative) of the maximum and the leading right eigenvector
    reshapes, after phase fixing and Hermitization, to a positive definite
    matrix.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    E = transfer.matrix
    D = transfer.bond_dim
    try:
        vals, vecs = np.linalg.eig(E)
        lvals, lvecs = np.linalg.eig(E.T)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver did not converge: {exc}") from exc

    order = np.argsort(-np.abs(vals), kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    lorder = np.argsort(-np.abs(lvals), kind="stable")
    lvals, lvecs = lvals[lorder], lvecs[:, lorder]

    lam1 = vals[0]
    mag1 = abs(lam1)
    if mag1 == 0:
        raise NumericalFailure("transfer matrix is nilpotent; no leading eigenvalue")
    normalized = vals / mag1
    degeneracy = int(np.sum(np.abs(np.abs(vals) - mag1) <= tol * mag1))

    rho = _phase_fix_hermitize(vecs[:, 0].reshape(D, D))
    tr_rho = np.trace(rho).real
    if abs(tr_rho) > 1e-14:
        rho = rho / tr_rho
    left = _phase_fix_hermitize(lvecs[:, 0].reshape(D, D))
    tr_left = np.trace(left).real
    if abs(tr_left) > 1e-14:
        left = left / tr_left

    rho_eigs = np.linalg.eigvalsh(rho)
    positive_definite = rho_eigs.min() > 1e-12

    if len(vals) > 1 and abs(normalized[1]) < 1.0 - tol:
        sub = abs(normalized[1])
        xi = 0.0 if sub == 0.0 else -1.0 / math.log(sub)
    elif len(vals) == 1:
        xi = 0.0
    else:
        xi = math.inf

    return SpectralReport(
        eigenvalues=normalized,
        leading=complex(lam1),
        rho=rho,
        left_fixed=left,
        xi=xi,
        is_normal=(degeneracy == 1 and positive_definite),
        degeneracy=degeneracy,
        tol=tol,
    )


def analyze_tensor(tensor: SiteTensor, tol: float = DEGENERACY_TOL) -> SpectralReport:
    """Shorthand for ``spectral_analyze(transfer_matrix(tensor))``."""
    return spectral_analyze(transfer_matrix(tensor), tol=tol)


def psd_sqrt(mat: np.ndarray, floor: float = -1e-10) -> np.ndarray:
    """Square root of a Hermitian positive semidefinite matrix.

    Eigenvalues below ``floor`` (relative to the largest) raise
    ``NotPositive`` via ValidationError; small negatives are clipped to zero.
    """
    from .errors import NotPositive

    herm = 0.5 * (mat + mat.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    scale = max(vals.max(), 0.0)
    if scale > 0 and vals.min() < floor * max(scale, 1.0):
        raise NotPositive(f"matrix has negative eigenvalue {vals.min():.3e}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def canonical_gauge(tensor: SiteTensor, tol: float = DEGENERACY_TOL) -> SiteTensor:
    """Gauge a normal tensor so the left fixed point is the identity.

    Returns ``A' = s^(1/2) A s^(-1/2) / sqrt(lam1)`` with ``s`` the Hermitized
    positive left fixed point.  The output satisfies
    ``sum_i A'^i_dag A'^i = 1`` and has a positive definite trace-one right
    fixed point; the generated state is unchanged up to normalization.
    """
    report = analyze_tensor(tensor, tol=tol)
    if not report.is_normal:
        raise NotNormal(
            f"tensor is not normal (degeneracy {report.degeneracy}); cannot gauge"
        )
    lam1 = report.leading
    if abs(lam1.imag) > 1e-9 * abs(lam1):
        raise NumericalFailure(f"leading eigenvalue {lam1} is not real positive")
    lam1 = lam1.real

    sigma = report.left_fixed
    svals, svecs = np.linalg.eigh(sigma)
    if svals.min() <= 0 or svals.max() / svals.min() > GAUGE_COND_LIMIT:
        raise IllConditioned(
            f"left fixed point condition number exceeds {GAUGE_COND_LIMIT:g}"
        )
    sqrt_s = (svecs * np.sqrt(svals)) @ svecs.conj().T
    inv_sqrt_s = (svecs * (1.0 / np.sqrt(svals))) @ svecs.conj().T

    gauged = np.einsum("jl,ilm,mk->ijk", sqrt_s, tensor.data, inv_sqrt_s)
    return SiteTensor(gauged / math.sqrt(lam1))


def block(tensor: SiteTensor, q: int, budget: int = ELEMENT_BUDGET) -> SiteTensor:
    """Group ``q`` adjacent sites into one super-site.

    The result has physical dimension ``d**q`` and the same bond dimensions;
    its transfer matrix is the ``q``-th power of the input's.
    """
    if q < 1:
        raise ValidationError(f"blocking range must be >= 1, got {q}")
    if not tensor.square_bonded:
        raise NonSquareBond("blocking needs a square-bonded tensor")
    d, D = tensor.d, tensor.D_l
    if d**q * D * D > budget:
        raise SizeOverflow(
            f"blocked tensor would hold {d**q * D * D} complex entries "
            f"(budget {budget})"
        )
    out = tensor.data
    for _ in range(q - 1):
        out = np.einsum("xjm,imk->xijk", out, tensor.data)
        out = out.reshape(out.shape[0] * d, D, D)
    return SiteTensor(out)


def merge_sites(tensors: list[SiteTensor] | tuple[SiteTensor, ...]) -> SiteTensor:
    """Contract a run of adjacent (possibly inhomogeneous) site tensors."""
    if not tensors:
        raise ShapeMismatch("cannot merge an empty site group")
    out = tensors[0].data
    for t in tensors[1:]:
        if out.shape[2] != t.D_l:
            raise ShapeMismatch("bond mismatch while merging sites")
        out = np.einsum("xjm,imk->xijk", out, t.data)
        out = out.reshape(out.shape[0] * out.shape[1], out.shape[2], out.shape[3])
    return SiteTensor(out)


@dataclass(frozen=True)
class OverlapResult:
    """Normalized overlap plus the raw contraction and both chain norms."""

    normalized: complex
    raw: complex
    norm1: float
    norm2: float


def _align_site_groups(chain1: MpsChain, chain2: MpsChain) -> list[tuple[SiteTensor, SiteTensor]]:
    """Pair up sites of two chains, merging runs so physical dims agree.

    Allows comparing a chain against its own blocked re-expression.
    """
    if chain1.tiled or chain2.tiled:
        raise ShapeMismatch("site alignment is only defined for explicit chains")
    pairs = []
    s1 = list(chain1.sites)
    s2 = list(chain2.sites)
    i = j = 0
    while i < len(s1) and j < len(s2):
        g1, g2 = [s1[i]], [s2[j]]
        i += 1
        j += 1
        d1, d2 = g1[0].d, g2[0].d
        while d1 != d2:
            if d1 < d2:
                if i >= len(s1):
                    raise ShapeMismatch("chains cover different total spaces")
                g1.append(s1[i])
                d1 *= s1[i].d
                i += 1
            else:
                if j >= len(s2):
                    raise ShapeMismatch("chains cover different total spaces")
                g2.append(s2[j])
                d2 *= s2[j].d
                j += 1
        t1 = g1[0] if len(g1) == 1 else merge_sites(g1)
        t2 = g2[0] if len(g2) == 1 else merge_sites(g2)
        pairs.append((t1, t2))
    if i != len(s1) or j != len(s2):
        raise ShapeMismatch("chains cover different total spaces")
    return pairs


def _contract_mixed(chain1: MpsChain, chain2: MpsChain) -> complex:
    """Raw <chain1|chain2> by mixed transfer contraction."""
    if chain1.boundary is not chain2.boundary:
        raise ShapeMismatch("chains have different boundary types")
    periodic = chain1.boundary is Boundary.PERIODIC

    if chain1.tiled != chain2.tiled:
        # expand the tiled side when that is affordable, so blocked
        # re-expressions of modest chains still compare
        tiled = chain1 if chain1.tiled else chain2
        if tiled.n_sites > (1 << 16):
            raise ShapeMismatch("tiled chain too long to expand for alignment")
        chain1, chain2 = chain1.explicit(), chain2.explicit()

    if chain1.tiled or chain2.tiled:
        if chain1.n_sites != chain2.n_sites or len(chain1.sites) != len(chain2.sites):
            raise ShapeMismatch("tiled chains need matching lengths and patterns")
        acc = None
        for a, b in zip(chain1.sites, chain2.sites):
            e = mixed_transfer(a, b)
            acc = e if acc is None else acc @ e
        reps = chain1.n_sites // len(chain1.sites)
        total = np.linalg.matrix_power(acc, reps)
        return complex(np.trace(total))

    acc = None
    for a, b in _align_site_groups(chain1, chain2):
        e = mixed_transfer(a, b)
        acc = e if acc is None else acc @ e
    if periodic:
        return complex(np.trace(acc))
    if acc.shape != (1, 1):
        raise ShapeMismatch("open chain must start and end with dimension-1 bonds")
    return complex(acc[0, 0])


def chain_norm_sq(chain: MpsChain) -> float:
    """Squared norm of the chain state."""
    val = _contract_mixed(chain, chain)
    return max(float(val.real), 0.0)


def mps_overlap(chain1: MpsChain, chain2: MpsChain) -> OverlapResult:
    """Overlap <chain1|chain2> of normalized chain states.

    Cost is one mixed transfer matrix per site; periodic tiled chains use
    repeated squaring so site counts up to 1e6 are fine.
    """
    raw = _contract_mixed(chain1, chain2)
    n1 = chain_norm_sq(chain1)
    n2 = chain_norm_sq(chain2)
    if n1 <= 0 or n2 <= 0:
        raise NumericalFailure("cannot normalize a zero-norm chain")
    return OverlapResult(
        normalized=raw / math.sqrt(n1 * n2), raw=raw, norm1=math.sqrt(n1), norm2=math.sqrt(n2)
    )


def error_metric(chain1: MpsChain, chain2: MpsChain) -> float:
    """Preparation error 1 - |<chain1|chain2>| for normalized inputs."""
    val = 1.0 - abs(mps_overlap(chain1, chain2).normalized)
    return max(val, 0.0)


def dense_state(chain: MpsChain, cap: int = DENSE_STATE_CAP, normalize: bool = True) -> np.ndarray:
    """Contract a chain to a dense state vector (brute-force oracle).

    Amplitudes are ordered row-major over the per-site physical indices.
    """
    dims = chain.physical_dims()
    total = 1
    for d in dims:
        total *= d
        if total > cap:
            raise TooLarge(f"dense state dimension exceeds cap {cap}")
    first = chain.site(0)
    acc = first.data.copy()  # (phys, left, right)
    for n in range(1, chain.n_sites):
        t = chain.site(n)
        acc = np.tensordot(acc, t.data, axes=([2], [1]))  # (P, left, d, right)
        acc = acc.transpose(0, 2, 1, 3)
        acc = acc.reshape(acc.shape[0] * acc.shape[1], acc.shape[2], acc.shape[3])
    if chain.boundary is Boundary.PERIODIC:
        vec = np.einsum("pjj->p", acc)
    else:
        if acc.shape[1] != 1 or acc.shape[2] != 1:
            raise ShapeMismatch("open chain must start and end with dimension-1 bonds")
        vec = acc[:, 0, 0]
    if normalize:
        nrm = np.linalg.norm(vec)
        if nrm == 0:
            raise NumericalFailure("chain contracts to the zero vector")
        vec = vec / nrm
    return vec
