"""Pointwise geometry of a perfect-fluid state.

Signature is (-, +, +, +). Indices are raised and lowered with the spacetime
metric only; the acoustical metric keeps its lower-index form in ``G`` and its
inverse in ``Ginv`` and is never used to move indices.

Classes:
    Metric4: constant-coefficient Lorentzian metric and its inverse
    FluidState: four-velocity, thermodynamic state and background metric
    AcousticalMetric: G, its inverse and the sound speed squared

Functions:
    normalize_velocity, projector, acoustical_metric, enthalpy_current, acceleration
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import DegenerateSoundSpeed, DomainError, NoTimelikeCompletion, NotNormalized
from .grid import GridField4, centered_diff
from .thermo import ThermoState

Array = npt.NDArray[np.float64]


@dataclass(frozen=True)
class Metric4:
    """Constant Lorentzian metric with lower-index components ``g`` and inverse ``ginv``."""

    g: Array
    ginv: Array = field(default=None)

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=float)
        if g.shape != (4, 4) or not np.allclose(g, g.T, atol=0, rtol=0):
            raise DomainError("metric must be a symmetric 4x4 matrix")
        ginv = np.linalg.inv(g) if self.ginv is None else np.asarray(self.ginv, dtype=float)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "ginv", ginv)
        if not np.allclose(g @ ginv, np.eye(4), atol=1e-12, rtol=0):
            raise DomainError("g and ginv are not inverse to each other")
        ev = np.linalg.eigvalsh(g)
        if not (ev[0] < 0 < ev[1]):
            raise DomainError("metric signature is not (-,+,+,+)")

    @classmethod
    def minkowski(cls) -> "Metric4":
        eta = np.diag([-1.0, 1.0, 1.0, 1.0])
        return cls(eta, eta.copy())

    @property
    def is_minkowski(self) -> bool:
        return bool(np.array_equal(self.g, np.diag([-1.0, 1.0, 1.0, 1.0])))

    def lower(self, v: Array) -> Array:
        return self.g @ np.asarray(v, dtype=float)

    def raise_(self, w: Array) -> Array:
        return self.ginv @ np.asarray(w, dtype=float)

    def dot(self, a: Array, b: Array) -> float:
        return float(np.asarray(a) @ self.g @ np.asarray(b))


MINKOWSKI = Metric4.minkowski()


@dataclass(frozen=True)
class FluidState:
    """Perfect-fluid state at a point: contravariant u, thermodynamics and metric."""

    u: Array
    thermo: ThermoState
    metric: Metric4 = MINKOWSKI

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float)
        object.__setattr__(self, "u", u)
        if u[0] <= 0:
            raise NotNormalized("u must be future pointing")
        if abs(self.metric.dot(u, u) + 1.0) > 1e-8:
            raise NotNormalized(f"u.u = {self.metric.dot(u, u)!r}, expected -1")

    @classmethod
    def from_spatial(cls, spatial, thermo: ThermoState, metric: Metric4 = MINKOWSKI) -> "FluidState":
        return cls(normalize_velocity(spatial, metric), thermo, metric)

    @property
    def enthalpy_sum(self) -> float:
        """p + rho."""
        return self.thermo.p + self.thermo.rho


@dataclass(frozen=True)
class AcousticalMetric:
    """Acoustical metric: ``G`` with lower indices, ``Ginv`` its inverse."""

    G: Array
    Ginv: Array
    cs2: float


def normalize_velocity(spatial, metric: Metric4 = MINKOWSKI) -> Array:
    """Complete spatial components u^i to a future-pointing unit timelike u.

    Solves g_00 (u^0)^2 + 2 g_0i u^i u^0 + g_ij u^i u^j = -1 for the positive root.
    """
    ui = np.asarray(spatial, dtype=float).reshape(3)
    g = metric.g
    a = g[0, 0]
    b = 2.0 * g[0, 1:] @ ui
    c = ui @ g[1:, 1:] @ ui + 1.0
    disc = b * b - 4.0 * a * c
    if a >= 0 or disc < 0:
        raise NoTimelikeCompletion("no real root for u^0")
    # a < 0 here, so the larger root is (-b - sqrt(disc)) / (2a)
    u0 = (-b - np.sqrt(disc)) / (2.0 * a)
    if u0 <= 0:
        raise NoTimelikeCompletion("no future-pointing root for u^0")
    return np.concatenate([[u0], ui])


def _check_normalized(u: Array, metric: Metric4, tol: float = 1e-8) -> None:
    nrm = metric.dot(u, u)
    if abs(nrm + 1.0) > tol:
        raise NotNormalized(f"|u.u + 1| = {abs(nrm + 1.0):.3e}")


def projector(u, metric: Metric4 = MINKOWSKI) -> Array:
    """Mixed projector Pi^a_b = delta^a_b + u^a u_b onto the u-orthogonal space."""
    u = np.asarray(u, dtype=float)
    _check_normalized(u, metric)
    return np.eye(4) + np.outer(u, metric.lower(u))


def projector_upper(u, metric: Metric4 = MINKOWSKI) -> Array:
    """Contravariant projector Pi^{ab} = g^{ab} + u^a u^b."""
    u = np.asarray(u, dtype=float)
    return metric.ginv + np.outer(u, u)


def acoustical_metric(u, cs2: float, metric: Metric4 = MINKOWSKI) -> AcousticalMetric:
    """Acoustical metric G = cs^-2 g + (cs^-2 - 1) u_flat u_flat and its inverse.

    The inverse is taken from the closed form cs^2 g^-1 + (cs^2 - 1) u u.
    """
    if cs2 <= 0:
        raise DegenerateSoundSpeed("acoustical metric needs cs2 > 0")
    u = np.asarray(u, dtype=float)
    _check_normalized(u, metric)
    ul = metric.lower(u)
    if cs2 == 1.0:
        return AcousticalMetric(metric.g.copy(), metric.ginv.copy(), 1.0)
    G = metric.g / cs2 + (1.0 / cs2 - 1.0) * np.outer(ul, ul)
    Ginv = cs2 * metric.ginv + (cs2 - 1.0) * np.outer(u, u)
    return AcousticalMetric(G, Ginv, float(cs2))


def expected_det_G(cs2: float, metric: Metric4 = MINKOWSKI) -> float:
    """det G = cs^-6 det g; equals -cs^-6 in Minkowski rectangular coordinates."""
    return float(cs2**-3 * np.linalg.det(metric.g)) if not metric.is_minkowski else -(cs2**-3)


def enthalpy_current(state: FluidState) -> tuple[Array, float]:
    """Return w = h u together with the norm check w.w + h^2."""
    h = state.thermo.h
    if h is None or h <= 0:
        raise DomainError("enthalpy current needs h > 0")
    w = h * state.u
    return w, state.metric.dot(w, w) + h * h


def acceleration(u: GridField4 | Array, spacing=None, order: int = 2) -> Array:
    """Acceleration a^a = u^m d_m u^a of a sampled four-velocity field.

    Args:
        u: array of shape (4, Nt, Nx, Ny, Nz) or a GridField4 holding ``u``.
        spacing: grid spacings (dt, dx, dy, dz) when an array is passed.
        order: finite-difference order, 2 or 4.
    """
    if isinstance(u, GridField4):
        spacing, periodic, u = u.spacing, u.periodic, u["u"]
    else:
        periodic = (True, True, True, True)
    d = [centered_diff(u, mu + 1, spacing[mu], periodic[mu], order) for mu in range(4)]
    return sum(u[mu] * d[mu] for mu in range(4))
