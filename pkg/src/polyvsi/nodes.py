"""Resource and slack node models.

Resources follow a polynomial (ZIP) law per phase: active and reactive power
are quadratic polynomials in the voltage magnitude normalized by a reference
v0, scaled by the reference powers p0/q0 and a loading factor lambda.  Any
such resource decomposes exactly, at a given voltage, into a constant
admittance, a constant current, and a constant power term; that decomposition
is what the stability index consumes.  Slacks are ideal polyphase sources
behind a Thevenin impedance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularThevenin, ZeroVoltage

CLOSURE_TOL = 1e-9


@dataclass(frozen=True)
class ZipCoefficients:
    """Normalized polynomial coefficients (quadratic, linear, constant).

    The closure alpha + beta + gamma = 1 pins the reference power to the
    reference voltage: at |v| = v0 the polynomial evaluates to one.
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        s = self.alpha + self.beta + self.gamma
        if abs(s - 1.0) > CLOSURE_TOL:
            raise ValueError(f"ZIP coefficients must sum to 1, got {s!r}")

    @classmethod
    def from_table(cls, alpha: float, beta: float, gamma: float) -> "ZipCoefficients":
        """Build from published (possibly rounded) values, renormalizing.

        Printed coefficient tables are often rounded so the triple sums to
        1 +/- 1e-3.  Dividing by the sum restores the closure exactly while
        staying within the rounding error of the source.
        """
        s = alpha + beta + gamma
        if abs(s - 1.0) > 0.01:
            raise ValueError(f"coefficient triple sums to {s!r}, not a rounded 1")
        return cls(alpha / s, beta / s, gamma / s)

    def eval(self, u: float) -> float:
        return (self.alpha * u + self.beta) * u + self.gamma


@dataclass(frozen=True)
class PhaseResource:
    """Reference powers and ZIP triples of one phase of a resource.

    p0 is in watt, q0 in var; injections are positive, so consuming loads
    carry negative references.
    """

    p0: float
    q0: float
    zip_re: ZipCoefficients
    zip_im: ZipCoefficients


@dataclass(frozen=True)
class ResourceModel:
    """Polyphase ZIP resource at one node.

    v0 is the reference voltage magnitude (phase-to-ground, volt), shared by
    all phases.  lam >= 0 scales both power polynomials; kind distinguishes
    loads (scaled along a continuation) from compensators (held fixed).
    """

    node: object
    v0: float
    phases: tuple
    lam: float = 1.0
    kind: str = "load"

    def __post_init__(self):
        if not self.v0 > 0.0:
            raise ValueError("reference voltage must be positive")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError("loading factor must be finite and >= 0")
        if self.kind not in ("load", "compensator"):
            raise ValueError(f"unknown resource kind {self.kind!r}")
        object.__setattr__(self, "phases", tuple(self.phases))

    @property
    def p(self) -> int:
        return len(self.phases)

    def with_lam(self, lam: float) -> "ResourceModel":
        return replace(self, lam=lam)


@dataclass(frozen=True)
class ZipDecomposition:
    """Exact split of a ZIP resource at one voltage.

    y_pm is the constant-admittance part (drawn as -y_pm * v current),
    i_pm the constant-current injection phasor, s_pm the constant power.
    """

    y_pm: complex
    i_pm: complex
    s_pm: complex


@dataclass(frozen=True)
class SlackModel:
    """Ideal polyphase source v_te behind the Thevenin impedance z_te."""

    node: object
    v_te: np.ndarray
    z_te: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v_te, dtype=complex)
        z = np.asarray(self.z_te, dtype=complex)
        if v.ndim != 1:
            raise ValueError("v_te must be a vector")
        if z.shape != (v.size, v.size):
            raise ValueError("z_te must be P x P matching v_te")
        scale = np.linalg.norm(z)
        if scale > 0.0 and np.linalg.norm(z - z.T) > 1e-9 * scale:
            raise ValueError("z_te must be symmetric")
        re = (z.real + z.real.T) / 2.0
        if np.linalg.eigvalsh(re)[0] < -1e-9 * max(scale, 1.0):
            raise ValueError("Re(z_te) must be positive semidefinite")
        object.__setattr__(self, "v_te", v)
        object.__setattr__(self, "z_te", z)

    @property
    def p(self) -> int:
        return self.v_te.size

    def __eq__(self, other):
        if not isinstance(other, SlackModel):
            return NotImplemented
        return (
            self.node == other.node
            and np.array_equal(self.v_te, other.v_te)
            and np.array_equal(self.z_te, other.z_te)
        )


def pm_power_at(model: ResourceModel, phase: int, v: complex) -> complex:
    """Injected complex power of one phase at voltage phasor v.

    phase is 1-based.  S = lam * (p0 * poly_re(u) + j q0 * poly_im(u)) with
    u = |v| / v0.
    """
    ph = model.phases[phase - 1]
    u = abs(v) / model.v0
    p = model.lam * ph.p0 * ph.zip_re.eval(u)
    q = model.lam * ph.q0 * ph.zip_im.eval(u)
    return complex(p, q)


def pm_zip_at(model: ResourceModel, phase: int, v: complex) -> ZipDecomposition:
    """Exact admittance / current / power split at voltage v (1-based phase).

    The quadratic terms become a constant admittance, the linear terms a
    constant current aligned with v, the constant terms a constant power:

        y_pm = -conj(lam (alpha_re p0 + j alpha_im q0)) / v0^2
        i_pm = conj(lam (beta_re p0 + j beta_im q0) / v0) * v / |v|
        s_pm = lam (gamma_re p0 + j gamma_im q0)

    so that -conj(y_pm) |v|^2 + v conj(i_pm) + s_pm reproduces pm_power_at.
    """
    if v == 0:
        raise ZeroVoltage(f"resource {model.node} phase {phase}: |v| = 0")
    ph = model.phases[phase - 1]
    s_z = model.lam * complex(ph.zip_re.alpha * ph.p0, ph.zip_im.alpha * ph.q0)
    s_i = model.lam * complex(ph.zip_re.beta * ph.p0, ph.zip_im.beta * ph.q0)
    s_p = model.lam * complex(ph.zip_re.gamma * ph.p0, ph.zip_im.gamma * ph.q0)
    y_pm = -np.conj(s_z) / (model.v0 * model.v0)
    i_pm = np.conj(s_i / model.v0) * (v / abs(v))
    return ZipDecomposition(y_pm=complex(y_pm), i_pm=complex(i_pm), s_pm=s_p)


def injected_current(model: ResourceModel, phase: int, v: complex) -> complex:
    """Current injection consistent with the power law: I = conj(S(v) / v)."""
    if v == 0:
        raise ZeroVoltage(f"resource {model.node} phase {phase}: |v| = 0")
    return complex(np.conj(pm_power_at(model, phase, v) / v))


def slack_interface(model: SlackModel):
    """Return (y_te, v_te) with y_te = z_te^-1.

    Raises SingularThevenin when z_te cannot be inverted reliably.
    """
    z = model.z_te
    s = np.linalg.svd(z, compute_uv=False)
    if s[0] == 0.0 or s[-1] / s[0] < 1e-13:
        raise SingularThevenin(f"slack {model.node}: z_te is numerically singular")
    return np.linalg.inv(z), model.v_te.copy()
