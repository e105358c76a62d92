"""Polyphase grid model and compound admittance algebra.

The network is a graph of polyphase branches and shunts over nodes tagged
with a role (slack, zero-injection, or resource).  All electrical parameters
are P x P complex matrices in SI units (ohm, siemens).  This module builds
the compound nodal admittance matrix, eliminates zero-injection interior
nodes by Kron reduction (a Schur complement), and exchanges voltage and
current roles on a node subset via the hybrid parameter transformation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import BlockMatrix
from .errors import AsymmetricParameter, SingularBranch, SingularInteriorBlock

ROLE_SLACK = "slack"
ROLE_ZERO = "zero"
ROLE_RESOURCE = "resource"
_ROLES = (ROLE_SLACK, ROLE_ZERO, ROLE_RESOURCE)

# Below this reciprocal condition estimate a block is treated as singular.
RCOND_FLOOR = 1e-13


def _rcond(a: np.ndarray) -> float:
    """Reciprocal 2-norm condition estimate; 0.0 for exactly singular input."""
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


@dataclass(frozen=True)
class Node:
    """Grid node: hashable id, role tag, optional nominal phase-to-ground volts."""

    id: object
    role: str
    vnom: float | None = None

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"unknown node role {self.role!r}")
        if self.vnom is not None and not self.vnom > 0.0:
            raise ValueError("nominal voltage must be positive")


@dataclass(frozen=True)
class Branch:
    """Two-terminal polyphase branch.

    z is the P x P series impedance in ohm, referred to the to-node side.
    gain is the no-load voltage ratio V_to / V_from of an ideal transformer
    in series with z; plain lines have gain 1.  y_shunt_from / y_shunt_to are
    optional P x P shunt admittance matrices tied to the terminals (the two
    half legs of a pi section).  rated_a is metadata for margin reporting.
    """

    from_node: object
    to_node: object
    z: np.ndarray
    gain: float = 1.0
    y_shunt_from: np.ndarray | None = None
    y_shunt_to: np.ndarray | None = None
    rated_a: float | None = None
    label: str | None = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ValueError("branch impedance must be a square matrix")
        if self.from_node == self.to_node:
            raise ValueError("branch endpoints must differ")
        if not self.gain > 0.0:
            raise ValueError("branch gain must be positive")
        object.__setattr__(self, "z", z)
        for name in ("y_shunt_from", "y_shunt_to"):
            y = getattr(self, name)
            if y is not None:
                y = np.asarray(y, dtype=complex)
                if y.shape != z.shape:
                    raise ValueError(f"{name} shape must match z")
                object.__setattr__(self, name, y)

    @property
    def p(self) -> int:
        return self.z.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Branch):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is b
            return np.array_equal(a, b)

        return (
            self.from_node == other.from_node
            and self.to_node == other.to_node
            and self.gain == other.gain
            and self.rated_a == other.rated_a
            and self.label == other.label
            and np.array_equal(self.z, other.z)
            and same(self.y_shunt_from, other.y_shunt_from)
            and same(self.y_shunt_to, other.y_shunt_to)
        )


@dataclass(frozen=True)
class Shunt:
    """Node-to-ground admittance, P x P in siemens."""

    node: object
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValueError("shunt admittance must be a square matrix")
        object.__setattr__(self, "y", y)

    def __eq__(self, other):
        if not isinstance(other, Shunt):
            return NotImplemented
        return self.node == other.node and np.array_equal(self.y, other.y)


@dataclass(frozen=True)
class GridModel:
    """Validated polyphase grid: ordered nodes, branches, shunts.

    Construction checks structural sanity: unique node ids, known endpoint
    references, uniform phase count, and weak connectivity of the branch
    graph.  Electrical parameter hypotheses are checked separately by
    validate_parameters.
    """

    nodes: tuple
    branches: tuple
    shunts: tuple = ()
    p: int = 3

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "shunts", tuple(self.shunts))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        if not ids:
            raise ValueError("grid needs at least one node")
        known = set(ids)
        for b in self.branches:
            if b.from_node not in known or b.to_node not in known:
                raise ValueError(f"branch {b.from_node}-{b.to_node} references unknown node")
            if b.p != self.p:
                raise ValueError("branch phase count differs from grid")
        for s in self.shunts:
            if s.node not in known:
                raise ValueError(f"shunt at unknown node {s.node}")
            if s.y.shape[0] != self.p:
                raise ValueError("shunt phase count differs from grid")
        if not self._weakly_connected():
            raise ValueError("branch graph is not weakly connected")

    def _weakly_connected(self) -> bool:
        ids = [n.id for n in self.nodes]
        if len(ids) == 1:
            return True
        adj: dict = {i: set() for i in ids}
        for b in self.branches:
            adj[b.from_node].add(b.to_node)
            adj[b.to_node].add(b.from_node)
        seen = {ids[0]}
        stack = [ids[0]]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(ids)

    @property
    def node_ids(self) -> tuple:
        return tuple(n.id for n in self.nodes)

    def node(self, node_id) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def nodes_with_role(self, role: str) -> tuple:
        return tuple(n.id for n in self.nodes if n.role == role)

    @property
    def slack_nodes(self) -> tuple:
        return self.nodes_with_role(ROLE_SLACK)

    @property
    def zero_nodes(self) -> tuple:
        return self.nodes_with_role(ROLE_ZERO)

    @property
    def resource_nodes(self) -> tuple:
        return self.nodes_with_role(ROLE_RESOURCE)


@dataclass(frozen=True)
class Violation:
    """One parameter-hypothesis violation found by validate_parameters."""

    kind: str
    element: str
    detail: str

    def __str__(self):
        return f"{self.element}: {self.kind} ({self.detail})"


def build_incidence(grid: GridModel, polyphase: bool = False) -> np.ndarray:
    """Branch-node incidence matrix: +1 at from-node, -1 at to-node.

    With polyphase=True the matrix is expanded to blocks via the Kronecker
    product with the P x P identity.
    """
    ids = grid.node_ids
    col = {n: i for i, n in enumerate(ids)}
    a = np.zeros((len(grid.branches), len(ids)), dtype=float)
    for r, b in enumerate(grid.branches):
        a[r, col[b.from_node]] = 1.0
        a[r, col[b.to_node]] = -1.0
    if polyphase:
        a = np.kron(a, np.eye(grid.p))
    return a


def _check_symmetric(m: np.ndarray, what: str, tol: float):
    scale = np.linalg.norm(m)
    if scale == 0.0:
        return
    if np.linalg.norm(m - m.T) > tol * scale:
        raise AsymmetricParameter(f"{what} is not symmetric within tolerance {tol}")


def branch_stamp(branch: Branch) -> np.ndarray:
    """2P x 2P admittance stamp of one branch (series element only).

    Inverts the series impedance and applies the ideal-transformer gain g =
    V_to/V_from: [[g^2 y, -g y], [-g y, y]].  For gain 1 this is the familiar
    [[y, -y], [-y, y]] so that summing stamps over branches reproduces the
    incidence-based assembly A' Y_L A.
    """
    if _rcond(branch.z) < RCOND_FLOOR:
        raise SingularBranch(
            f"branch {branch.from_node}-{branch.to_node} series impedance is singular"
        )
    y = np.linalg.inv(branch.z)
    g = branch.gain
    p = branch.p
    stamp = np.empty((2 * p, 2 * p), dtype=complex)
    stamp[:p, :p] = g * g * y
    stamp[:p, p:] = -g * y
    stamp[p:, :p] = -g * y
    stamp[p:, p:] = y
    return stamp


def assemble_admittance(grid: GridModel, sym_tol: float = 1e-9) -> BlockMatrix:
    """Compound nodal admittance matrix Y of the grid.

    Series contributions follow the incidence structure (generalized by the
    per-branch transformer gain); branch pi shunts and node shunts add onto
    the diagonal blocks.  Raises SingularBranch or AsymmetricParameter when
    a branch parameter fails its hypothesis outright.
    """
    p = grid.p
    ids = grid.node_ids
    n = len(ids)
    sl = {node: slice(i * p, (i + 1) * p) for i, node in enumerate(ids)}
    y = np.zeros((n * p, n * p), dtype=complex)
    for b in grid.branches:
        _check_symmetric(b.z, f"branch {b.from_node}-{b.to_node} impedance", sym_tol)
        stamp = branch_stamp(b)
        f, t = sl[b.from_node], sl[b.to_node]
        y[f, f] += stamp[:p, :p]
        y[f, t] += stamp[:p, p:]
        y[t, f] += stamp[p:, :p]
        y[t, t] += stamp[p:, p:]
        if b.y_shunt_from is not None:
            _check_symmetric(b.y_shunt_from, f"branch {b.from_node}-{b.to_node} from-shunt", sym_tol)
            y[f, f] += b.y_shunt_from
        if b.y_shunt_to is not None:
            _check_symmetric(b.y_shunt_to, f"branch {b.from_node}-{b.to_node} to-shunt", sym_tol)
            y[t, t] += b.y_shunt_to
    for s in grid.shunts:
        _check_symmetric(s.y, f"shunt at {s.node}", sym_tol)
        y[sl[s.node], sl[s.node]] += s.y
    return BlockMatrix(y, ids, ids, p)


def validate_parameters(grid: GridModel, tol: float = 1e-9) -> list[Violation]:
    """Check the passivity hypotheses on every branch and shunt.

    Each series impedance must be symmetric, invertible, and have a positive
    semidefinite real part; shunt admittances must be symmetric with PSD real
    part.  Violations are returned as data, not raised, so a caller can
    report all of them at once.
    """
    out: list[Violation] = []

    def check(m: np.ndarray, element: str, invertible: bool):
        scale = np.linalg.norm(m)
        if scale == 0.0:
            if invertible:
                out.append(Violation("singular", element, "matrix is zero"))
            return
        asym = np.linalg.norm(m - m.T) / scale
        if asym > tol:
            out.append(Violation("asymmetric", element, f"relative asymmetry {asym:.2e}"))
        re = (m.real + m.real.T) / 2.0
        eig = np.linalg.eigvalsh(re)
        floor = -tol * max(eig[-1], scale)
        if eig[0] < floor:
            out.append(
                Violation("indefinite-real-part", element, f"min eigenvalue {eig[0]:.3e}")
            )
        if invertible and _rcond(m) < RCOND_FLOOR:
            out.append(Violation("singular", element, f"rcond < {RCOND_FLOOR}"))

    for b in grid.branches:
        name = f"branch {b.from_node}-{b.to_node}"
        check(b.z, f"{name} impedance", invertible=True)
        if b.y_shunt_from is not None:
            check(b.y_shunt_from, f"{name} from-shunt", invertible=False)
        if b.y_shunt_to is not None:
            check(b.y_shunt_to, f"{name} to-shunt", invertible=False)
    for s in grid.shunts:
        check(s.y, f"shunt at {s.node}", invertible=False)
    return out


def kron_reduce(y: BlockMatrix, zero_set) -> BlockMatrix:
    """Eliminate the zero-injection nodes in zero_set by Schur complement.

    Y / Y_ZZ = Y_CC - Y_CZ Y_ZZ^-1 Y_ZC over the retained nodes C, which
    preserves the terminal behavior when the eliminated nodes carry no
    injection.  Eliminating one node at a time gives the same result.
    """
    if not y.square:
        raise ValueError("kron_reduce needs a square block matrix")
    zero = [n for n in y.row_nodes if n in set(zero_set)]
    unknown = set(zero_set) - set(y.row_nodes)
    if unknown:
        raise ValueError(f"zero_set contains unknown nodes {sorted(map(str, unknown))}")
    if len(zero) == len(y.row_nodes):
        raise ValueError("cannot eliminate every node")
    if not zero:
        return y
    keep = [n for n in y.row_nodes if n not in set(zero)]
    zi = y.row_indices(zero)
    ki = y.row_indices(keep)
    yzz = y.data[np.ix_(zi, zi)]
    if _rcond(yzz) < RCOND_FLOOR:
        raise SingularInteriorBlock("eliminated block is numerically singular")
    ycz = y.data[np.ix_(ki, zi)]
    yzc = y.data[np.ix_(zi, ki)]
    ycc = y.data[np.ix_(ki, ki)]
    reduced = ycc - ycz @ np.linalg.solve(yzz, yzc)
    return BlockMatrix(reduced, tuple(keep), tuple(keep), y.p)


@dataclass(frozen=True)
class HybridPartition:
    """Hybrid parameter blocks for a node subset M of a square admittance Y.

    Maps the mixed boundary vector [V_Mc; I_M] to [I_Mc; V_M]:

        I_Mc = h_mcmc V_Mc + h_mcm I_M
        V_M  = h_mmc  V_Mc + h_mm  I_M

    with h_mm = Y_MM^-1, h_mmc = -Y_MM^-1 Y_MMc, h_mcm = Y_McM Y_MM^-1 and
    h_mcmc the Schur complement Y / Y_MM.
    """

    m_nodes: tuple
    mc_nodes: tuple
    h_mm: BlockMatrix
    h_mmc: BlockMatrix
    h_mcm: BlockMatrix
    h_mcmc: BlockMatrix


def hybrid_partition(y: BlockMatrix, m_set) -> HybridPartition:
    """Exchange voltage and current roles on the node subset m_set."""
    if not y.square:
        raise ValueError("hybrid_partition needs a square block matrix")
    m = [n for n in y.row_nodes if n in set(m_set)]
    unknown = set(m_set) - set(y.row_nodes)
    if unknown:
        raise ValueError(f"m_set contains unknown nodes {sorted(map(str, unknown))}")
    if not m:
        raise ValueError("m_set must be nonempty")
    mc = [n for n in y.row_nodes if n not in set(m_set)]
    mi = y.row_indices(m)
    ci = y.row_indices(mc)
    ymm = y.data[np.ix_(mi, mi)]
    if _rcond(ymm) < RCOND_FLOOR:
        raise SingularInteriorBlock("Y_MM block is numerically singular")
    ymm_inv = np.linalg.inv(ymm)
    ymmc = y.data[np.ix_(mi, ci)]
    ymcm = y.data[np.ix_(ci, mi)]
    ymcmc = y.data[np.ix_(ci, ci)]
    h_mm = ymm_inv
    h_mmc = -ymm_inv @ ymmc
    h_mcm = ymcm @ ymm_inv
    h_mcmc = ymcmc - ymcm @ ymm_inv @ ymmc
    m = tuple(m)
    mc = tuple(mc)
    return HybridPartition(
        m_nodes=m,
        mc_nodes=mc,
        h_mm=BlockMatrix(h_mm, m, m, y.p),
        h_mmc=BlockMatrix(h_mmc, m, mc, y.p),
        h_mcm=BlockMatrix(h_mcm, mc, m, y.p),
        h_mcmc=BlockMatrix(h_mcmc, mc, mc, y.p),
    )
