"""Layered circuit IR and assembly of the preparation schemes.

Circuits are expressed over qubit registers.  Assembly places pair
preparation on block boundaries, routes block inputs with SWAP chains so
every unitary acts on a contiguous window (except in the measurement-assisted
tree scheme, where long-range gates stand for teleported ones), and embeds
each isometric factor as a completed unitary with explicit ancilla flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .compiler import SequentialFactors, TreeDecomposition
from .depth import Scheme
from .errors import (
    DimensionMismatch,
    NotDivisible,
    ShapeMismatch,
    UnsupportedScheme,
    ValidationError,
)
from .fixed_point import FixedPointState
from .polar import complete_unitary, embed_isometry
from .tensors import Boundary, MpsChain


# ---------------------------------------------------------------------------
# Gates and IR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairPrep:
    """Inject a two-register pair state onto |0..0> qubits."""

    support: tuple[int, ...]
    amplitudes: np.ndarray  # dim 2**len(support), row-major over support

    kind = "pair"


@dataclass(frozen=True)
class GhzPrep:
    """Inject sum_j alpha_j |j>^(x)M onto M zeroed backbone qubits.

    Stands in for the constant-depth measurement-assisted preparation of the
    branch backbone; simulated as a direct state injection.
    """

    support: tuple[int, ...]
    coefficients: np.ndarray  # one per branch level

    kind = "ghz"


@dataclass(frozen=True)
class EmbeddedIsometry:
    """A completed unitary on the support qubits (axis order follows the
    support tuple).  ``ancilla[i]`` marks support qubits that must arrive in
    |0>."""

    support: tuple[int, ...]
    unitary: np.ndarray
    ancilla: tuple[bool, ...]
    label: str = ""

    kind = "isometry"


@dataclass(frozen=True)
class SwapGate:
    support: tuple[int, ...]  # exactly two qubits

    kind = "swap"


Gate = Union[PairPrep, GhzPrep, EmbeddedIsometry, SwapGate]


@dataclass(frozen=True)
class CircuitIR:
    """Layered list of placed gates over named qubit registers."""

    registers: tuple[tuple[str, int], ...]
    layers: tuple[tuple[Gate, ...], ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.registers)
        for layer in self.layers:
            seen: set[int] = set()
            for gate in layer:
                for qubit in gate.support:
                    if not 0 <= qubit < n:
                        raise ValidationError(f"gate support {qubit} out of range")
                    if qubit in seen:
                        raise ValidationError(
                            "gates within a layer must have disjoint supports"
                        )
                    seen.add(qubit)

    @property
    def n_qubits(self) -> int:
        return len(self.registers)

    @property
    def layer_depth(self) -> int:
        return len(self.layers)

    def gates(self):
        for layer in self.layers:
            yield from layer


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _site_registers(n_sites: int, qubits_per_site: int) -> tuple[tuple[str, int], ...]:
    regs = []
    for s in range(n_sites):
        for k in range(qubits_per_site):
            regs.append((f"s{s}.q{k}" if qubits_per_site > 1 else f"s{s}", 2))
    return tuple(regs)


def _qubit_width(dim: int, what: str) -> int:
    w = int(round(math.log2(dim)))
    if 2**w != dim:
        raise DimensionMismatch(f"{what} dimension {dim} is not a power of two")
    return w


def _width_ceil(dim: int) -> int:
    return max(0, math.ceil(math.log2(dim))) if dim > 1 else 0


def _pad_bond_rows(mat: np.ndarray, bond_out_padded: int, phys: int) -> np.ndarray:
    """Pad rows indexed (bond, phys) so the bond factor reaches a qubit size."""
    rows, cols = mat.shape
    bond_out = rows // phys
    padded = np.zeros((bond_out_padded * phys, cols), dtype=np.complex128)
    padded[: bond_out * phys] = mat
    return padded


def _pad_phys_rows(mat: np.ndarray, phys: int, bond: int, bond_padded: int) -> np.ndarray:
    """Pad rows indexed (phys, bond) so the bond factor reaches a qubit size."""
    rows, cols = mat.shape
    padded = np.zeros((phys * bond_padded, cols), dtype=np.complex128)
    for i in range(phys):
        padded[i * bond_padded : i * bond_padded + bond] = mat[i * bond : (i + 1) * bond]
    return padded


def _complete_columns(mat: np.ndarray, in_dim: int) -> np.ndarray:
    """Extend isometry columns to ``in_dim`` (extra inputs never occur)."""
    if mat.shape[1] == in_dim:
        return mat
    return complete_unitary(mat, mat.shape[0], np.arange(mat.shape[1]))[:, :in_dim]


def _group_move_steps(src: int, dst: int, width: int) -> list[list[tuple[int, int]]]:
    """Swap sub-layers moving a width-qubit group from src to dst, one
    position per step (each step costs ``width`` sub-layers)."""
    steps: list[list[tuple[int, int]]] = []
    direction = 1 if dst > src else -1
    pos = src
    while pos != dst:
        order = range(width - 1, -1, -1) if direction > 0 else range(width)
        for k in order:
            steps.append([(pos + k, pos + k + direction)])
        pos += direction
    return steps


def _merge_block_schedules(per_block: list[list[list[Gate]]]) -> list[tuple[Gate, ...]]:
    """Zip per-block gate step lists into global layers (blocks are disjoint)."""
    depth = max(len(steps) for steps in per_block)
    layers: list[tuple[Gate, ...]] = []
    for t in range(depth):
        layer: list[Gate] = []
        for steps in per_block:
            if t < len(steps):
                layer.extend(steps[t])
        if layer:
            layers.append(tuple(layer))
    return layers


def _pair_layer(fixed_point: FixedPointState, blocks: int, block_qubits: int,
                bond_qubits: int) -> tuple[Gate, ...]:
    pair = fixed_point.pairs[0]
    gates = []
    for i in range(blocks):
        right = [i * block_qubits + block_qubits - bond_qubits + k for k in range(bond_qubits)]
        nxt = ((i + 1) % blocks) * block_qubits
        left = [nxt + k for k in range(bond_qubits)]
        support = tuple(right + left)
        if len(set(support)) != len(support):
            raise ValidationError("pair supports collide; block too small")
        gates.append(PairPrep(support=support, amplitudes=pair.copy()))
    return tuple(gates)


# ---------------------------------------------------------------------------
# Sequential-RG staircase
# ---------------------------------------------------------------------------


def assemble_sequential_rg(factors: SequentialFactors, fixed_point: FixedPointState,
                           n_sites: int, q: int) -> CircuitIR:
    """Pair layer, SWAP routing of the left bond half across the block, then
    the right-to-left staircase of embedded staircase isometries."""
    if fixed_point.branch_count != 1:
        raise UnsupportedScheme("staircase assembly expects a single-branch fixed point")
    if q != factors.q:
        raise ValidationError(f"factors describe q={factors.q}, requested {q}")
    if n_sites % q != 0:
        raise NotDivisible(f"{n_sites} sites do not split into blocks of {q}")
    blocks = n_sites // q
    a = _qubit_width(factors.d, "physical")
    bond = _qubit_width(fixed_point.bond_dim, "bond")
    Q = a * q
    if Q < 2 * bond:
        raise DimensionMismatch("block too small to host both pair halves")

    # bond widths in qubits after each site (site q's input is the full pair)
    widths = [0] + [_width_ceil(r) for r in factors.ranks] + [2 * bond]
    mats = [f.matrix for f in factors.sweep] + [factors.core]

    gate_plan = []  # (window_start, size, unitary, ancilla flags, label)
    for m in range(q, 0, -1):
        w_out, w_in = widths[m - 1], widths[m]
        mat = _pad_bond_rows(mats[m - 1], 2 ** w_out, 2 ** a)
        mat = _complete_columns(mat, 2 ** w_in)
        size = w_out + a
        start = a * (m - 1) - w_out
        if start < 0:
            raise DimensionMismatch("staircase rank exceeds the available qubits")
        anc = tuple(k < size - w_in for k in range(size))
        unitary, flags = embed_isometry(mat, reg_dims=(2,) * size, ancilla=anc)
        gate_plan.append((start, size, unitary, flags, f"staircase-site-{m}"))

    per_block: list[list[list[Gate]]] = []
    for i in range(blocks):
        base = i * Q
        steps: list[list[Gate]] = []
        for sub in _group_move_steps(0, Q - 2 * bond, bond):
            steps.append([SwapGate(support=(base + x, base + y)) for x, y in sub])
        for start, size, unitary, flags, label in gate_plan:
            steps.append([EmbeddedIsometry(
                support=tuple(base + start + k for k in range(size)),
                unitary=unitary, ancilla=flags, label=label)])
        per_block.append(steps)

    layers = [_pair_layer(fixed_point, blocks, Q, bond)]
    layers.extend(_merge_block_schedules(per_block))
    return CircuitIR(
        registers=_site_registers(n_sites, a),
        layers=tuple(layers),
        metadata={"scheme": Scheme.SEQUENTIAL_RG.value, "q": q, "n_sites": n_sites},
    )


# ---------------------------------------------------------------------------
# Tree-RG
# ---------------------------------------------------------------------------


def assemble_tree_rg(tree: TreeDecomposition, fixed_point: FixedPointState,
                     n_sites: int, q: int, measured: bool = False) -> CircuitIR:
    """Pair layer, then one gate layer per tree level from coarsest to
    finest; levels spanning more than four bond groups are SWAP-routed to a
    contiguous center window (or left long-range when measurement-assisted).
    """
    if fixed_point.branch_count != 1:
        raise UnsupportedScheme("tree assembly expects a single-branch fixed point")
    if tree.pre_block != 1:
        raise UnsupportedScheme("tree assembly requires d >= D (no pre-blocking)")
    if q != tree.sites_covered:
        raise ValidationError(f"tree covers {tree.sites_covered} sites, not q={q}")
    if n_sites % q != 0:
        raise NotDivisible(f"{n_sites} sites do not split into blocks of {q}")
    blocks = n_sites // q
    a = _qubit_width(tree.d, "physical")
    bond = _qubit_width(tree.D, "bond")
    k = tree.depth
    Q = a * q

    per_block: list[list[list[Gate]]] = []
    for i in range(blocks):
        base = i * Q
        steps: list[list[Gate]] = []
        for m in range(k, 0, -1):
            window = a * (2 ** m)
            n_gates = 2 ** (k - m)
            level = tree.levels[m - 1]

            if m == 1:
                size = 2 * a
                anc = tuple(bond <= j < size - bond for j in range(size))
                unitary, flags = embed_isometry(
                    level.isometry, reg_dims=(2,) * size, ancilla=anc)
                steps.append([
                    EmbeddedIsometry(
                        support=tuple(base + g * window + j for j in range(size)),
                        unitary=unitary, ancilla=flags, label="tree-level-1")
                    for g in range(n_gates)
                ])
                continue

            size = 4 * bond
            anc = tuple(bond <= j < 3 * bond for j in range(size))
            unitary, flags = embed_isometry(
                level.isometry, reg_dims=(2,) * size, ancilla=anc)
            center = window // 2 - 2 * bond
            travel = center  # distance each outer group moves inward
            if measured or travel == 0:
                if travel == 0:
                    offsets = list(range(size))
                else:
                    offsets = (
                        list(range(bond))
                        + [window // 2 - bond + j for j in range(bond)]
                        + [window // 2 + j for j in range(bond)]
                        + [window - bond + j for j in range(bond)]
                    )
                steps.append([
                    EmbeddedIsometry(
                        support=tuple(base + g * window + off for off in offsets),
                        unitary=unitary, ancilla=flags, label=f"tree-level-{m}")
                    for g in range(n_gates)
                ])
                continue

            # route both outer bond groups to the center, apply, route back
            left_in = _group_move_steps(0, center, bond)
            right_in = _group_move_steps(window - bond, center + 3 * bond, bond)
            for lsub, rsub in zip(left_in, right_in):
                step: list[Gate] = []
                for g in range(n_gates):
                    w0 = base + g * window
                    step.extend(SwapGate(support=(w0 + x, w0 + y)) for x, y in lsub)
                    step.extend(SwapGate(support=(w0 + x, w0 + y)) for x, y in rsub)
                steps.append(step)
            steps.append([
                EmbeddedIsometry(
                    support=tuple(base + g * window + center + j for j in range(size)),
                    unitary=unitary, ancilla=flags, label=f"tree-level-{m}")
                for g in range(n_gates)
            ])
            left_out = _group_move_steps(center, 0, bond)
            right_out = _group_move_steps(center + 3 * bond, window - bond, bond)
            for lsub, rsub in zip(left_out, right_out):
                step = []
                for g in range(n_gates):
                    w0 = base + g * window
                    step.extend(SwapGate(support=(w0 + x, w0 + y)) for x, y in lsub)
                    step.extend(SwapGate(support=(w0 + x, w0 + y)) for x, y in rsub)
                steps.append(step)
        per_block.append(steps)

    scheme = Scheme.TREE_RG_MEASURED if measured else Scheme.TREE_RG
    metadata: dict = {"scheme": scheme.value, "q": q, "n_sites": n_sites,
                      "tree_depth": k}
    if measured:
        metadata["teleportation"] = (
            "long-range isometries stand for gate teleportation; Bell-pair "
            "ancillas, measurements and corrections are not simulated"
        )
    layers = [_pair_layer(fixed_point, blocks, Q, bond)]
    layers.extend(_merge_block_schedules(per_block))
    return CircuitIR(
        registers=_site_registers(n_sites, a),
        layers=tuple(layers),
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Sequential (staircase over the whole chain)
# ---------------------------------------------------------------------------


def _right_canonicalize(chain: MpsChain) -> list[np.ndarray]:
    """Right-canonical tensors of an explicit open chain (norm dropped)."""
    if chain.boundary is not Boundary.OPEN or chain.tiled:
        raise ValidationError("sequential assembly needs an explicit open chain")
    tensors = [t.data.copy() for t in chain.sites]
    for n in range(len(tensors) - 1, 0, -1):
        t = tensors[n]
        d, Dl, Dr = t.shape
        mat = t.transpose(1, 0, 2).reshape(Dl, d * Dr)
        qmat, rmat = np.linalg.qr(mat.conj().T)  # RQ via QR of the adjoint
        rank = qmat.shape[1]
        tensors[n] = qmat.conj().T.reshape(rank, d, Dr).transpose(1, 0, 2)
        tensors[n - 1] = np.einsum("ijk,kl->ijl", tensors[n - 1], rmat.conj().T)
    tensors[0] = tensors[0] / np.linalg.norm(tensors[0])
    return tensors


def assemble_sequential(chain: MpsChain) -> CircuitIR:
    """Site-by-site staircase preparing an open-boundary chain exactly.

    After right-canonicalization each site tensor is an isometry from its
    incoming bond to (physical site, outgoing bond); gate n acts on site n
    plus the leading qubits of site n+1, so the first gate is pure state
    preparation and the bulk gates are bond-to-site-plus-bond isometries.
    """
    tensors = _right_canonicalize(chain)
    d = tensors[0].shape[0]
    a = _qubit_width(d, "physical")
    if any(t.shape[0] != d for t in tensors):
        raise DimensionMismatch("sequential assembly needs a uniform physical dim")
    n = len(tensors)

    layers: list[tuple[Gate, ...]] = []
    w_in = 0
    for site, t in enumerate(tensors):
        d_, Dl, Dr = t.shape
        w_out = _width_ceil(Dr) if site < n - 1 else 0
        if site == n - 1 and Dr != 1:
            raise ShapeMismatch("open chain must end with a dimension-1 bond")
        if w_out > a:
            raise DimensionMismatch("bond does not fit inside the next site")
        iso = t.transpose(0, 2, 1).reshape(d_ * Dr, Dl)  # rows (phys, bond')
        iso = _pad_phys_rows(iso, d_, Dr, 2 ** w_out)
        iso = _complete_columns(iso, 2 ** w_in)
        size = a + w_out
        support = [site * a + j for j in range(a)]
        support += [(site + 1) * a + j for j in range(w_out)]
        anc = tuple(j >= w_in for j in range(size))
        unitary, flags = embed_isometry(iso, reg_dims=(2,) * size, ancilla=anc)
        layers.append((EmbeddedIsometry(
            support=tuple(support), unitary=unitary, ancilla=flags,
            label=f"sequential-site-{site + 1}"),))
        w_in = w_out
    return CircuitIR(
        registers=_site_registers(n, a),
        layers=tuple(layers),
        metadata={"scheme": Scheme.SEQUENTIAL.value, "q": 0, "n_sites": n},
    )


# ---------------------------------------------------------------------------
# Non-normal (branch backbone) preparation
# ---------------------------------------------------------------------------


def _extend_basis(columns: np.ndarray) -> np.ndarray:
    """Orthonormal square matrix whose leading columns span the given ones."""
    dim, k = columns.shape
    basis: list[np.ndarray] = []
    for i in range(k):
        vec = columns[:, i].copy()
        for bvec in basis:
            vec -= bvec * (bvec.conj() @ vec)
        nrm = np.linalg.norm(vec)
        if nrm < 1e-12:
            raise ValidationError("support columns are linearly dependent")
        basis.append(vec / nrm)
    cand = 0
    while len(basis) < dim:
        vec = np.zeros(dim, dtype=np.complex128)
        vec[cand] = 1.0
        cand += 1
        for bvec in basis:
            vec -= bvec * (bvec.conj() @ vec)
        for bvec in basis:
            vec -= bvec * (bvec.conj() @ vec)
        nrm = np.linalg.norm(vec)
        if nrm > 1e-7:
            basis.append(vec / nrm)
    return np.stack(basis, axis=1)


def assemble_nonnormal(isometry_full: np.ndarray, support_basis: np.ndarray,
                       fixed_point: FixedPointState, n_sites: int,
                       q: int) -> CircuitIR:
    """Branch-superposed preparation: backbone injection, branch-conditioned
    pair emission, then one local block gate per block.

    Supported when the blocked physical space equals the virtual pair space
    (the block gate is then a plain local unitary) and the branch count
    equals the bond dimension; covers the GHZ class exactly.
    """
    b = fixed_point.branch_count
    D = fixed_point.bond_dim
    if b != D:
        raise UnsupportedScheme("backbone layout needs branch count == bond dimension")
    if n_sites % q != 0:
        raise NotDivisible(f"{n_sites} sites do not split into blocks of {q}")
    blocks = n_sites // q
    d_block = isometry_full.shape[0]
    if isometry_full.shape[1] != D * D or d_block != D * D:
        raise UnsupportedScheme(
            "non-normal assembly needs blocked physical space == pair space"
        )
    Q = _qubit_width(d_block, "block")  # qubits per block
    if Q % q != 0:
        raise DimensionMismatch("block qubits do not split evenly over sites")
    bond = _qubit_width(D, "bond")

    backbone = []
    for i in range(blocks):
        backbone.extend(i * Q + Q - bond + j for j in range(bond))
    layers: list[tuple[Gate, ...]] = [
        (GhzPrep(support=tuple(backbone), coefficients=fixed_point.coefficients.copy()),)
    ]

    w_cols = np.stack(list(fixed_point.pairs), axis=1)  # (D^2, b): |j> -> |omega_j>
    emit = []
    for i in range(blocks):
        right = [i * Q + Q - bond + j for j in range(bond)]
        nxt = ((i + 1) % blocks) * Q
        left = [nxt + j for j in range(bond)]
        unitary, flags = embed_isometry(
            w_cols, reg_dims=(2,) * (2 * bond),
            ancilla=tuple(j >= bond for j in range(2 * bond)))
        emit.append(EmbeddedIsometry(
            support=tuple(right + left), unitary=unitary, ancilla=flags,
            label="branch-pair"))
    layers.append(tuple(emit))

    images = isometry_full @ support_basis
    unitary = _extend_basis(images) @ _extend_basis(support_basis).conj().T
    block_gates = []
    for i in range(blocks):
        support = tuple(i * Q + j for j in range(Q))
        block_gates.append(EmbeddedIsometry(
            support=support, unitary=unitary, ancilla=(False,) * Q,
            label="block-isometry"))
    layers.append(tuple(block_gates))

    return CircuitIR(
        registers=_site_registers(n_sites, Q // q),
        layers=tuple(layers),
        metadata={
            "scheme": Scheme.SEQUENTIAL_RG.value, "q": q, "n_sites": n_sites,
            "branches": b,
            "backbone": "constant-depth-with-measurement placeholder",
        },
    )


def assemble_circuit(scheme: Scheme, factors, fixed_point: FixedPointState,
                     n_sites: int, q: int) -> CircuitIR:
    """Assemble a preparation circuit for the requested scheme.

    ``factors`` carries the scheme-specific decomposition: staircase factors
    for the blocked sequential scheme, a tree decomposition for the tree
    schemes, or an open-boundary chain for the plain sequential baseline.
    """
    if scheme is Scheme.SEQUENTIAL:
        if not isinstance(factors, MpsChain):
            raise ValidationError("sequential scheme takes an open-boundary chain")
        return assemble_sequential(factors)
    if scheme is Scheme.SEQUENTIAL_RG:
        if not isinstance(factors, SequentialFactors):
            raise ValidationError("sequential-rg scheme takes staircase factors")
        return assemble_sequential_rg(factors, fixed_point, n_sites, q)
    if scheme in (Scheme.TREE_RG, Scheme.TREE_RG_MEASURED):
        if not isinstance(factors, TreeDecomposition):
            raise ValidationError("tree schemes take a tree decomposition")
        return assemble_tree_rg(factors, fixed_point, n_sites, q,
                                measured=scheme is Scheme.TREE_RG_MEASURED)
    raise UnsupportedScheme(str(scheme))


# ---------------------------------------------------------------------------
# JSON form
# ---------------------------------------------------------------------------


def _cplx_list(arr: np.ndarray) -> dict:
    flat = np.asarray(arr).reshape(-1)
    return {"re": [float(x) for x in flat.real], "im": [float(x) for x in flat.imag]}


def _cplx_array(payload: dict, shape: tuple[int, ...]) -> np.ndarray:
    re = np.asarray(payload["re"], dtype=np.float64)
    im = np.asarray(payload["im"], dtype=np.float64)
    return (re + 1j * im).reshape(shape)


def circuit_to_dict(circuit: CircuitIR) -> dict:
    layers = []
    for layer in circuit.layers:
        entries = []
        for gate in layer:
            entry: dict = {"kind": gate.kind, "support": list(gate.support)}
            if isinstance(gate, EmbeddedIsometry):
                entry["unitary"] = _cplx_list(gate.unitary)
                entry["ancilla"] = list(gate.ancilla)
                if gate.label:
                    entry["label"] = gate.label
            elif isinstance(gate, PairPrep):
                entry["pair"] = _cplx_list(gate.amplitudes)
            elif isinstance(gate, GhzPrep):
                entry["coefficients"] = _cplx_list(gate.coefficients)
            entries.append(entry)
        layers.append(entries)
    return {
        "registers": [[name, dim] for name, dim in circuit.registers],
        "layers": layers,
        "metadata": dict(circuit.metadata),
    }


def circuit_from_dict(payload: dict) -> CircuitIR:
    registers = tuple((str(name), int(dim)) for name, dim in payload["registers"])
    layers = []
    for layer in payload["layers"]:
        gates: list[Gate] = []
        for entry in layer:
            kind = entry["kind"]
            support = tuple(int(x) for x in entry["support"])
            if kind == "isometry":
                dim = 2 ** len(support)
                gates.append(EmbeddedIsometry(
                    support=support,
                    unitary=_cplx_array(entry["unitary"], (dim, dim)),
                    ancilla=tuple(bool(x) for x in entry["ancilla"]),
                    label=entry.get("label", ""),
                ))
            elif kind == "pair":
                dim = 2 ** len(support)
                gates.append(PairPrep(support=support,
                                      amplitudes=_cplx_array(entry["pair"], (dim,))))
            elif kind == "ghz":
                coeffs = entry["coefficients"]
                gates.append(GhzPrep(
                    support=support,
                    coefficients=_cplx_array(coeffs, (len(coeffs["re"]),)),
                ))
            elif kind == "swap":
                gates.append(SwapGate(support=support))
            else:
                raise ValidationError(f"unknown gate kind {kind!r}")
        layers.append(tuple(gates))
    return CircuitIR(registers=registers, layers=tuple(layers),
                     metadata=dict(payload.get("metadata", {})))
