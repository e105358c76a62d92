"""Polar power flow on the augmented polyphase grid.

Unknowns are the voltage magnitude and angle of every physical node-phase;
the internal Thevenin source voltages are held fixed.  The mismatch is the
complex power balance per node-phase: computed injection V conj((Y' V))
minus the resource model power (zero at slack terminals and zero-injection
nodes).  Magnitudes are normalized by nominal voltage and powers by a common
base so one tolerance applies across voltage levels.

The Jacobian is analytic.  Newton iteration checks convergence before each
correction, so a point that already satisfies the tolerance is returned
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, SingularJacobian
from .grid import GridModel
from .vsi import build_augmented, evaluate_vsi, reduce_augmented


def wrap_angle(theta: np.ndarray) -> np.ndarray:
    """Wrap angles into (-pi, pi]."""
    out = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


@dataclass(frozen=True)
class OperatingPoint:
    """Voltage magnitudes/angles per (node, phase) plus the loading factor.

    e and theta have shape (len(nodes), p); phases are 1-based in accessors.
    """

    nodes: tuple
    p: int
    e: np.ndarray
    theta: np.ndarray
    xi: float = 1.0

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        shape = (len(self.nodes), self.p)
        if e.shape != shape or th.shape != shape:
            raise ValueError(f"e/theta must have shape {shape}")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "theta", th)

    def _row(self, node) -> int:
        try:
            return self.nodes.index(node)
        except ValueError:
            raise KeyError(node) from None

    def magnitude(self, node, phase: int) -> float:
        return float(self.e[self._row(node), phase - 1])

    def angle(self, node, phase: int) -> float:
        return float(self.theta[self._row(node), phase - 1])

    def voltage(self, node, phase: int) -> complex:
        r = self._row(node)
        return complex(self.e[r, phase - 1] * np.exp(1j * self.theta[r, phase - 1]))

    def phasors(self) -> np.ndarray:
        return self.e * np.exp(1j * self.theta)


@dataclass(frozen=True)
class Mismatch:
    """Active/reactive power residuals (watt, var) per unknown (node, phase)."""

    nodes: tuple
    p: int
    dp: np.ndarray
    dq: np.ndarray

    @property
    def norm_inf(self) -> float:
        return float(max(np.abs(self.dp).max(), np.abs(self.dq).max()))


@dataclass(frozen=True)
class Jacobian:
    """Mismatch derivatives: dx w.r.t. [E_norm; theta], dxi w.r.t. xi."""

    dx: np.ndarray
    dxi: np.ndarray


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    iterations: int
    residuals: tuple
    converged: bool


class PolyphaseSystem:
    """Assembled power-flow system over a grid, its slacks, and resources.

    Exposes the residual/jacobian interface the continuation engine drives,
    plus converters between packed state vectors and OperatingPoint.  The
    loading trajectory is built in: load resources run at lam = xi and
    compensators at lam = 1 everywhere the loading factor appears.
    """

    def __init__(self, grid: GridModel, slacks, resources, s_base: float = 1e6):
        self.grid = grid
        self.p = grid.p
        self.s_base = float(s_base)
        order = {n: i for i, n in enumerate(grid.node_ids)}
        self.slacks = tuple(sorted(slacks, key=lambda s: order[s.node]))
        self.resources = tuple(sorted(resources, key=lambda r: order[r.node]))
        if {r.node for r in self.resources} != set(grid.resource_nodes):
            raise ValueError("resource models must match the grid's resource nodes")
        missing = [n.id for n in grid.nodes if n.vnom is None]
        if missing:
            raise ValueError(f"nodes without nominal voltage: {missing}")

        self.aug = build_augmented(grid, self.slacks)
        self.hybrid = reduce_augmented(self.aug, grid)
        self._y = self.aug.y_prime.data
        p = self.p
        n_int = len(self.aug.internal_nodes)
        self.unknown_nodes = grid.node_ids
        self.n_unknown = len(self.unknown_nodes) * p

        self._v_fixed = np.concatenate([s.v_te for s in self.slacks]) if n_int else np.zeros(0, complex)
        u0 = n_int * p
        self._y_uu = self._y[u0:, u0:]
        self._i_from_fixed = self._y[u0:, :u0] @ self._v_fixed

        self.e_nom = np.repeat([grid.node(n).vnom for n in self.unknown_nodes], p)

        nu = self.n_unknown
        self._is_res = np.zeros(nu, dtype=bool)
        self._is_load = np.zeros(nu, dtype=bool)
        self._p0 = np.zeros(nu)
        self._q0 = np.zeros(nu)
        self._zre = np.zeros((nu, 3))
        self._zim = np.zeros((nu, 3))
        self._v0 = np.ones(nu)
        flat = {n: i * p for i, n in enumerate(self.unknown_nodes)}
        for r in self.resources:
            if r.p != p:
                raise ValueError(f"resource {r.node} phase count differs from grid")
            base = flat[r.node]
            for q, ph in enumerate(r.phases):
                k = base + q
                self._is_res[k] = True
                self._is_load[k] = r.kind == "load"
                self._p0[k] = ph.p0
                self._q0[k] = ph.q0
                self._zre[k] = (ph.zip_re.alpha, ph.zip_re.beta, ph.zip_re.gamma)
                self._zim[k] = (ph.zip_im.alpha, ph.zip_im.beta, ph.zip_im.gamma)
                self._v0[k] = r.v0

    # -- state packing ---------------------------------------------------

    def flat_start(self, xi: float = 1.0) -> np.ndarray:
        """Nominal magnitudes with symmetric sequence angles."""
        del xi
        seq = -2.0 * np.pi * np.arange(self.p) / self.p
        theta = np.tile(wrap_angle(seq), len(self.unknown_nodes))
        return np.concatenate([np.ones(self.n_unknown), theta])

    def operating_point(self, x: np.ndarray, xi: float) -> OperatingPoint:
        nu = self.n_unknown
        e = (x[:nu] * self.e_nom).reshape(-1, self.p)
        theta = wrap_angle(x[nu:]).reshape(-1, self.p)
        return OperatingPoint(nodes=self.unknown_nodes, p=self.p, e=e, theta=theta, xi=float(xi))

    def pack(self, op: OperatingPoint) -> np.ndarray:
        if tuple(op.nodes) != tuple(self.unknown_nodes):
            e = np.array([[op.magnitude(n, q + 1) for q in range(self.p)] for n in self.unknown_nodes])
            th = np.array([[op.angle(n, q + 1) for q in range(self.p)] for n in self.unknown_nodes])
        else:
            e, th = op.e, op.theta
        return np.concatenate([e.ravel() / self.e_nom, th.ravel()])

    def resources_at(self, xi: float) -> tuple:
        return tuple(
            r.with_lam(float(xi)) if r.kind == "load" else r.with_lam(1.0) for r in self.resources
        )

    # -- residual / jacobian ----------------------------------------------

    def _lam(self, xi: float) -> np.ndarray:
        return np.where(self._is_load, float(xi), 1.0)

    def _split(self, x: np.ndarray):
        nu = self.n_unknown
        e = x[:nu] * self.e_nom
        theta = x[nu:]
        v = e * np.exp(1j * theta)
        i_u = self._i_from_fixed + self._y_uu @ v
        return e, theta, v, i_u

    def _model_power(self, e: np.ndarray, xi: float):
        u = e / self._v0
        lam = self._lam(xi)
        pz = (self._zre[:, 0] * u + self._zre[:, 1]) * u + self._zre[:, 2]
        qz = (self._zim[:, 0] * u + self._zim[:, 1]) * u + self._zim[:, 2]
        p_mod = np.where(self._is_res, lam * self._p0 * pz, 0.0)
        q_mod = np.where(self._is_res, lam * self._q0 * qz, 0.0)
        return p_mod, q_mod

    def residual(self, x: np.ndarray, xi: float) -> np.ndarray:
        e, _, v, i_u = self._split(x)
        s = v * np.conj(i_u)
        p_mod, q_mod = self._model_power(e, xi)
        return np.concatenate([s.real - p_mod, s.imag - q_mod]) / self.s_base

    def jacobian_x(self, x: np.ndarray, xi: float) -> np.ndarray:
        e, theta, v, i_u = self._split(x)
        unit = np.exp(1j * theta)
        m = v[:, None] * np.conj(self._y_uu * v[None, :])
        ds_dth = -1j * m
        np.fill_diagonal(ds_dth, ds_dth.diagonal() + 1j * v * np.conj(i_u))
        ds_de = v[:, None] * np.conj(self._y_uu * unit[None, :])
        np.fill_diagonal(ds_de, ds_de.diagonal() + unit * np.conj(i_u))

        u = e / self._v0
        lam = self._lam(xi)
        dp_de = np.where(
            self._is_res, lam * self._p0 * (2.0 * self._zre[:, 0] * u + self._zre[:, 1]) / self._v0, 0.0
        )
        dq_de = np.where(
            self._is_res, lam * self._q0 * (2.0 * self._zim[:, 0] * u + self._zim[:, 1]) / self._v0, 0.0
        )
        j_pe = ds_de.real
        j_qe = ds_de.imag
        np.fill_diagonal(j_pe, j_pe.diagonal() - dp_de)
        np.fill_diagonal(j_qe, j_qe.diagonal() - dq_de)

        scale = self.e_nom[None, :]
        top = np.hstack([j_pe * scale, ds_dth.real])
        bot = np.hstack([j_qe * scale, ds_dth.imag])
        return np.vstack([top, bot]) / self.s_base

    def jacobian_xi(self, x: np.ndarray, xi: float) -> np.ndarray:
        del xi
        e = x[: self.n_unknown] * self.e_nom
        u = e / self._v0
        pz = (self._zre[:, 0] * u + self._zre[:, 1]) * u + self._zre[:, 2]
        qz = (self._zim[:, 0] * u + self._zim[:, 1]) * u + self._zim[:, 2]
        active = self._is_res & self._is_load
        dp = np.where(active, self._p0 * pz, 0.0)
        dq = np.where(active, self._q0 * qz, 0.0)
        return -np.concatenate([dp, dq]) / self.s_base

    # -- recording hooks ---------------------------------------------------

    def vsi_at(self, x: np.ndarray, xi: float):
        op = self.operating_point(x, xi)
        return evaluate_vsi(self.hybrid, self.slacks, self.resources_at(xi), op)

    def svd_at(self, x: np.ndarray, xi: float) -> tuple:
        return jacobian_svd(self.jacobian_x(x, xi))

    # -- reporting ----------------------------------------------------------

    def branch_series_currents(self, op: OperatingPoint) -> list:
        """Per branch: (branch, P-vector of complex series currents).

        The series-element current referred to the to-node winding,
        y (g V_from - V_to); for plain lines this is the conductor current
        between the pi shunts.
        """
        out = []
        for b in self.grid.branches:
            vf = np.array([op.voltage(b.from_node, q + 1) for q in range(self.p)])
            vt = np.array([op.voltage(b.to_node, q + 1) for q in range(self.p)])
            i_series = np.linalg.solve(b.z, b.gain * vf - vt)
            out.append((b, i_series))
        return out


def mismatch(system: PolyphaseSystem, x: OperatingPoint) -> Mismatch:
    """Power balance residual at the operating point, in watt/var."""
    f = system.residual(system.pack(x), x.xi) * system.s_base
    nu = system.n_unknown
    return Mismatch(
        nodes=system.unknown_nodes,
        p=system.p,
        dp=f[:nu].reshape(-1, system.p),
        dq=f[nu:].reshape(-1, system.p),
    )


def jacobian(system: PolyphaseSystem, x: OperatingPoint) -> Jacobian:
    """Analytic mismatch derivatives at the operating point."""
    packed = system.pack(x)
    return Jacobian(dx=system.jacobian_x(packed, x.xi), dxi=system.jacobian_xi(packed, x.xi))


def jacobian_svd(j) -> tuple:
    """(smallest, mean, largest) singular value of the state Jacobian."""
    a = j.dx if isinstance(j, Jacobian) else np.asarray(j)
    s = np.linalg.svd(a, compute_uv=False)
    return float(s[-1]), float(s.mean()), float(s[0])


def newton_solve(fun, jac, x0: np.ndarray, eps: float = 1e-8, max_iter: int = 30) -> NewtonResult:
    """Newton iteration with convergence checked before each correction.

    Returns once the max-norm of fun(x) is <= eps; raises NonConvergence
    (with the residual history attached) after max_iter corrections, and
    SingularJacobian if a linear solve fails.
    """
    x = np.asarray(x0, dtype=float).copy()
    history = []
    for it in range(max_iter + 1):
        g = np.asarray(fun(x), dtype=float)
        history.append(float(np.abs(g).max()) if g.size else 0.0)
        if history[-1] <= eps:
            return NewtonResult(x=x, iterations=it, residuals=tuple(history), converged=True)
        if it == max_iter:
            break
        j = np.asarray(jac(x), dtype=float)
        try:
            dx = np.linalg.solve(j, g)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"Newton Jacobian solve failed at iteration {it}") from exc
        if not np.all(np.isfinite(dx)):
            raise SingularJacobian(f"Newton correction not finite at iteration {it}")
        x = x - dx
    raise NonConvergence(
        f"no convergence to {eps} within {max_iter} corrections",
        x_last=x,
        residuals=history,
    )


def solve_power_flow(
    system: PolyphaseSystem,
    xi: float = 1.0,
    x0: np.ndarray | None = None,
    eps: float = 1e-8,
    max_iter: int = 30,
):
    """Solve the fixed-loading power flow; returns (OperatingPoint, NewtonResult)."""
    if x0 is None:
        x0 = system.flat_start(xi)
    res = newton_solve(
        lambda x: system.residual(x, xi),
        lambda x: system.jacobian_x(x, xi),
        x0,
        eps=eps,
        max_iter=max_iter,
    )
    return system.operating_point(res.x, xi), res
