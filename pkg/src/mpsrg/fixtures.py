"""Reference tensors and random ensembles used in tests and experiments.

The AKLT tensor encodes the spin-1 site in the symmetric subspace of two
qubits (physical dimension 4, bond dimension 2).  The tunable-correlation
family reaches any correlation length through one real parameter.  Random
chains are drawn in left-canonical form from Haar-distributed isometries.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError
from .tensors import Boundary, MpsChain, SiteTensor, analyze_tensor


def aklt_tensor() -> SiteTensor:
    """AKLT site tensor in the two-qubit symmetric encoding (d=4, D=2).

    Left-canonical; transfer spectrum {1, -1/3, -1/3, -1/3}, so the
    correlation length is 1/ln 3.
    """
    sp = np.array([[0.0, 1.0], [0.0, 0.0]])
    sm = np.array([[0.0, 0.0], [1.0, 0.0]])
    sz = np.array([[1.0, 0.0], [0.0, -1.0]])
    a_plus = math.sqrt(2.0 / 3.0) * sp
    a_zero = -math.sqrt(1.0 / 3.0) * sz
    a_minus = -math.sqrt(2.0 / 3.0) * sm
    data = np.zeros((4, 2, 2), dtype=np.complex128)
    data[0] = a_plus                      # |00> <- S=1, m=+1
    data[1] = a_zero / math.sqrt(2.0)     # |01> and |10| share m=0 symmetrically
    data[2] = a_zero / math.sqrt(2.0)
    data[3] = a_minus                     # |11> <- S=1, m=-1
    return SiteTensor(data)


def ghz_tensor() -> SiteTensor:
    """GHZ tensor (d=2, D=2): two decoupled branches, not normal."""
    data = np.zeros((2, 2, 2), dtype=np.complex128)
    data[0] = np.diag([1.0, 0.0])
    data[1] = np.diag([0.0, 1.0])
    return SiteTensor(data)


def g_family_tensor(g: float) -> SiteTensor:
    """Bond-dimension-2 family with correlation length 1/|ln((1-g)/(1+g))|."""
    if not 0.0 < g < 1.0:
        raise ValidationError(f"parameter must lie in (0, 1), got {g}")
    data = np.zeros((2, 2, 2), dtype=np.complex128)
    data[0] = np.array([[0.0, 0.0], [1.0, 1.0]])
    data[1] = np.array([[1.0, g], [0.0, 0.0]])
    return SiteTensor(data)


def g_for_xi(xi: float) -> float:
    """Family parameter hitting a requested correlation length."""
    if xi <= 0:
        raise ValidationError("correlation length must be positive")
    return math.tanh(1.0 / (2.0 * xi))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_left_canonical_tensor(rng: np.random.Generator, d: int = 2, D: int = 2) -> SiteTensor:
    """Left-canonical site tensor from the first D columns of a Haar unitary."""
    iso = haar_unitary(d * D, rng)[:, :D]
    return SiteTensor(iso.reshape(d, D, D))


def random_normal_tensor(rng: np.random.Generator, d: int = 2, D: int = 2,
                         max_tries: int = 64) -> SiteTensor:
    """Left-canonical tensor that passes the normality test (resampled if not)."""
    for _ in range(max_tries):
        t = random_left_canonical_tensor(rng, d, D)
        if analyze_tensor(t).is_normal:
            return t
    raise ValidationError("could not sample a normal tensor; ensemble degenerate?")


def identity_boundary_chain(tensor: SiteTensor, n_sites: int) -> MpsChain:
    """Open chain whose edge tensors expose the virtual index physically.

    The first (last) tensor maps the left (right) boundary bond straight onto
    the first D physical levels; requires d >= D.
    """
    d, D = tensor.d, tensor.D_l
    if d < D:
        raise ValidationError("identity boundary needs physical dim >= bond dim")
    if n_sites < 2:
        raise ValidationError("open chain needs at least two sites")
    first = np.zeros((d, 1, D), dtype=np.complex128)
    for i in range(D):
        first[i, 0, i] = 1.0
    last = np.zeros((d, D, 1), dtype=np.complex128)
    for i in range(D):
        last[i, i, 0] = 1.0
    bulk = (SiteTensor(tensor.data),) * (n_sites - 2)
    return MpsChain((SiteTensor(first),) + bulk + (SiteTensor(last),), Boundary.OPEN)


def random_open_chain(rng: np.random.Generator, n_sites: int, d: int = 2,
                      D: int = 2) -> MpsChain:
    """Inhomogeneous left-canonical open chain (norm exactly one).

    Every site reshapes the first ``D_r`` columns of a fresh Haar unitary of
    size ``d * D_l``.
    """
    if n_sites < 2:
        raise ValidationError("open chain needs at least two sites")
    sites = []
    D_l = 1
    for n in range(n_sites):
        D_r = 1 if n == n_sites - 1 else min(D, d ** (n + 1), d ** (n_sites - 1 - n))
        iso = haar_unitary(d * D_l, rng)[:, :D_r]
        sites.append(SiteTensor(iso.reshape(d, D_l, D_r)))
        D_l = D_r
    return MpsChain(tuple(sites), Boundary.OPEN)
