"""Characteristics of the relativistic Euler system.

The unknown is Phi = (u^0, u^1, u^2, u^3, rho, s). For a covector xi the
principal symbol A^a xi_a factorizes, and its determinant is

    (p + rho)^4 (u.xi)^4 [ (u.xi)^2 - cs^2 Pi^{mn} xi_m xi_n ].

Roots in xi_0 are found from this factorization: the flow-line root u.xi = 0
with multiplicity four and the two roots of the sound-cone quadratic
Ginv^{ab} xi_a xi_b = 0. The generic 6x6 determinant is kept as a cross-check.

Classes:
    Root, RootSet, CausalityVerdict

Functions:
    euler_symbol, euler_char_det, euler_char_det_closed, sound_cone_roots,
    classify_causality, scan_causality, det_A0, det_A0_closed, hyperbolic_poly_check,
    sphere_directions
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import numpy.typing as npt
from scipy.stats import norm, qmc

from .errors import DegenerateDirection
from .kinematics import FluidState, Metric4, MINKOWSKI, projector_upper

Array = npt.NDArray[np.float64]

ROOT_REL_TOL = 1e-9
LIGHTCONE_TOL = 1e-10


@dataclass(frozen=True)
class Root:
    value: complex
    multiplicity: int
    kind: str = ""

    @property
    def is_real(self) -> bool:
        return abs(complex(self.value).imag) <= ROOT_REL_TOL * max(1.0, abs(self.value))


@dataclass(frozen=True)
class RootSet:
    """Roots in xi_0 of a characteristic polynomial with multiplicities."""

    roots: tuple[Root, ...]
    degree: int
    status: str = "Real"

    def __post_init__(self) -> None:
        if sum(r.multiplicity for r in self.roots) != self.degree:
            raise ValueError("root multiplicities do not sum to the degree")


@dataclass(frozen=True)
class CausalityVerdict:
    status: str  # Causal, Acausal or NonReal
    witness: Optional[dict] = field(default=None)

    def __post_init__(self) -> None:
        if self.status == "Acausal" and self.witness is None:
            raise ValueError("Acausal verdicts carry a witness")


def euler_symbol(state: FluidState, xi) -> Array:
    """Principal symbol A^a xi_a of the Euler system in the variables (u, rho, s).

    Block layout: a 4x4 velocity block (p + rho)(u.xi) delta, density and entropy
    columns Pi^{ba} xi_a dp/drho and Pi^{ba} xi_a dp/ds, the density row
    ((p + rho) xi_l, u.xi, 0) and the entropy row (0, 0, u.xi).
    """
    xi = np.asarray(xi, dtype=float)
    u = state.u
    w = state.enthalpy_sum
    uxi = float(u @ xi)
    pxi = projector_upper(u, state.metric) @ xi
    A = np.zeros((6, 6))
    A[:4, :4] = w * uxi * np.eye(4)
    A[:4, 4] = pxi * state.thermo.dp_drho
    A[:4, 5] = pxi * state.thermo.dp_ds
    A[4, :4] = w * xi
    A[4, 4] = uxi
    A[5, 5] = uxi
    return A


def euler_char_det(state: FluidState, xi) -> float:
    """Numeric determinant of the 6x6 symbol."""
    return float(np.linalg.det(euler_symbol(state, xi)))


def euler_char_det_closed(state: FluidState, xi) -> float:
    """Closed form (p + rho)^4 (u.xi)^4 [(u.xi)^2 - cs^2 Pi xi xi]."""
    xi = np.asarray(xi, dtype=float)
    uxi = float(state.u @ xi)
    pxx = float(xi @ projector_upper(state.u, state.metric) @ xi)
    return state.enthalpy_sum**4 * uxi**4 * (uxi**2 - state.thermo.cs2 * pxx)


def euler_char_det_batch(w, cs2, u, xi, ginv=None):
    """Numeric and closed-form determinants for stacks of states.

    Args:
        w: (M,) values of p + rho.
        cs2: (M,) sound speeds squared.
        u: (M, 4) normalized four-velocities.
        xi: (M, 4) covectors.
        ginv: inverse metric, Minkowski by default.
    Returns:
        (numeric, closed) arrays of shape (M,).
    """
    ginv = MINKOWSKI.ginv if ginv is None else ginv
    w, cs2 = np.asarray(w, float), np.asarray(cs2, float)
    uxi = np.einsum("ma,ma->m", u, xi)
    pxi = xi @ ginv + uxi[:, None] * u
    m = len(w)
    A = np.zeros((m, 6, 6))
    idx = np.arange(4)
    A[:, idx, idx] = (w * uxi)[:, None]
    A[:, :4, 4] = pxi * cs2[:, None]
    A[:, 4, :4] = w[:, None] * xi
    A[:, 4, 4] = uxi
    A[:, 5, 5] = uxi
    numeric = np.linalg.det(A)
    pxx = np.einsum("ma,ma->m", pxi, xi)
    closed = w**4 * uxi**4 * (uxi**2 - cs2 * pxx)
    return numeric, closed


def _merge(values: list[tuple[complex, int, str]], scale: float) -> tuple[Root, ...]:
    out: list[list] = []
    for val, mult, kind in values:
        for item in out:
            if abs(item[0] - val) <= ROOT_REL_TOL * scale:
                item[1] += mult
                item[2] = item[2] + "+" + kind
                break
        else:
            out.append([val, mult, kind])
    return tuple(Root(complex(v) if abs(complex(v).imag) > 0 else float(np.real(v)), m, k) for v, m, k in out)


def sound_cone_roots(state: FluidState, xi_spatial) -> RootSet:
    """Roots xi_0 of the characteristic determinant for fixed spatial xi.

    Flow-line root: u^0 xi_0 + u^i xi_i = 0 (multiplicity 4). Sound roots: the
    quadratic Ginv^{00} xi_0^2 + 2 Ginv^{0i} xi_i xi_0 + Ginv^{ij} xi_i xi_j = 0 with
    Ginv = cs^2 g^-1 + (cs^2 - 1) u u, which also covers cs^2 <= 0 and cs^2 > 1.
    """
    k = np.asarray(xi_spatial, dtype=float).reshape(3)
    if not np.any(k):
        raise DegenerateDirection("spatial xi must be nonzero")
    u = state.u
    cs2 = state.thermo.cs2
    ginv = state.metric.ginv
    flow = -float(u[1:] @ k) / u[0]
    Gi = cs2 * ginv + (cs2 - 1.0) * np.outer(u, u)
    a = Gi[0, 0]
    b = 2.0 * float(Gi[0, 1:] @ k)
    c = float(k @ Gi[1:, 1:] @ k)
    scale = float(np.linalg.norm(k))
    if abs(a) <= 1e-300:
        raise DegenerateDirection("sound quadratic has vanishing leading coefficient")
    disc = b * b - 4.0 * a * c
    if disc >= 0:
        sq = np.sqrt(disc)
        # numerically stable pair of roots
        qv = -0.5 * (b + np.copysign(sq, b)) if b != 0 else -0.5 * sq
        r1 = qv / a
        r2 = c / qv if qv != 0 else -r1
        sound = sorted([float(r1), float(r2)])
        status = "Real"
    else:
        sq = np.sqrt(-disc)
        sound = [complex(-b / (2 * a), -sq / (2 * abs(a))), complex(-b / (2 * a), sq / (2 * abs(a)))]
        status = "NonReal"
    roots = _merge([(flow, 4, "flow"), (sound[0], 1, "sound"), (sound[1], 1, "sound")], scale)
    return RootSet(roots, 6, status)


def classify_causality(roots: RootSet, xi_spatial, metric: Metric4 = MINKOWSKI) -> CausalityVerdict:
    """Causal iff every root is real and its covector is not timelike with respect to g^-1.

    A covector counts as non-timelike when g^{mn} xi_m xi_n >= -1e-10 |xi_spatial|^2.
    """
    k = np.asarray(xi_spatial, dtype=float).reshape(3)
    scale = float(k @ k)
    if roots.status == "NonReal" or not all(r.is_real for r in roots.roots):
        bad = next(r for r in roots.roots if not r.is_real)
        return CausalityVerdict("NonReal", {"xi_spatial": k.tolist(), "root": [bad.value.real, bad.value.imag]})
    for r in roots.roots:
        xi = np.concatenate([[float(np.real(r.value))], k])
        q = float(xi @ metric.ginv @ xi)
        if q < -LIGHTCONE_TOL * scale:
            return CausalityVerdict("Acausal", {"xi_spatial": k.tolist(), "root": float(np.real(r.value)),
                                                "kind": r.kind, "g_inv_xi_xi": q})
    return CausalityVerdict("Causal")


def scan_causality(state: FluidState, count: int = 64, seed: int = 0) -> CausalityVerdict:
    """Classify over many spatial directions and return the worst verdict found.

    The directions are +-(flow direction) when the fluid moves, then
    ``count`` points from ``sphere_directions``. For cs^2 > 1 and a fast flow
    the sound quadratic is complex in most directions, while along the flow
    its roots stay real and timelike, so the flow direction is where an
    Acausal witness is found. Acausal is preferred over NonReal.
    """
    dirs = []
    us = state.u[1:]
    if np.linalg.norm(us) > 0:
        uhat = us / np.linalg.norm(us)
        dirs += [uhat, -uhat]
    dirs += list(sphere_directions(count, 3, seed))
    nonreal = None
    for k in dirs:
        v = classify_causality(sound_cone_roots(state, k), k, state.metric)
        if v.status == "Acausal":
            return v
        if v.status == "NonReal" and nonreal is None:
            nonreal = v
    return nonreal or CausalityVerdict("Causal")


def det_A0(state: FluidState) -> float:
    """Numeric determinant of A^0 (the symbol at xi = (1, 0, 0, 0))."""
    return euler_char_det(state, np.array([1.0, 0.0, 0.0, 0.0]))


def det_A0_closed(state: FluidState) -> float:
    """(p + rho)^4 (u^0)^4 (1 + (1 - cs^2) u^i u_i), Minkowski metric."""
    u = state.u
    uiui = float(u[1:] @ u[1:])
    return state.enthalpy_sum**4 * u[0] ** 4 * (1.0 + (1.0 - state.thermo.cs2) * uiui)


def sphere_directions(count: int, dim: int = 4, seed: int = 0) -> Array:
    """Deterministic low-discrepancy directions on the unit sphere in R^dim.

    Unscrambled Halton points are pushed through the normal quantile function
    and normalized; the coordinate axes are listed first.
    """
    axes = np.eye(dim)
    m = max(count - dim, 0)
    if m == 0:
        return axes[:count]
    pts = qmc.Halton(d=dim, scramble=False, seed=seed).random(m + 1)[1:]
    z = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return np.vstack([axes, z])


@dataclass(frozen=True)
class HyperbolicityResult:
    hyperbolic: bool
    witness: Optional[Array]
    directions_tested: int
    note: str = "sampled surrogate: the definition quantifies over all directions"


def hyperbolic_poly_check(poly: Callable[[Array], float], zeta, degree: int, sample_dirs: int = 4096,
                          delta_root: float = ROOT_REL_TOL) -> HyperbolicityResult:
    """Sampled test that ``poly`` is hyperbolic with respect to ``zeta``.

    For each sampled theta not parallel to zeta, the univariate polynomial
    lambda -> poly(lambda zeta + theta) is recovered exactly from degree + 1
    Chebyshev samples and must have ``degree`` real roots separated by at least
    delta_root times the root scale.
    """
    zeta = np.asarray(zeta, dtype=float)
    lead = poly(zeta)
    if abs(lead) <= 1e-300:
        raise DegenerateDirection("poly(zeta) = 0")
    zhat = zeta / np.linalg.norm(zeta)
    nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
    dirs = sphere_directions(sample_dirs, len(zeta))
    tested = 0
    for theta in dirs:
        if np.linalg.norm(theta - (theta @ zhat) * zhat) < 1e-8:
            continue
        tested += 1
        vals = np.array([poly(t * zeta + theta) for t in nodes])
        coef = np.polynomial.chebyshev.chebfit(nodes, vals, degree)
        rts = np.polynomial.chebyshev.chebroots(coef)
        scale = max(1.0, float(np.max(np.abs(rts))))
        if np.any(np.abs(np.imag(rts)) > delta_root * scale * 10):
            return HyperbolicityResult(False, theta, tested)
        re = np.sort(np.real(rts))
        if degree > 1 and np.min(np.diff(re)) < delta_root * scale:
            return HyperbolicityResult(False, theta, tested)
    return HyperbolicityResult(True, None, tested)


def euler_sound_factor(u, cs2: float, metric: Metric4 = MINKOWSKI) -> Callable[[Array], float]:
    """Quadratic (u.xi)^2 - cs^2 Pi^{mn} xi_m xi_n as a callable of xi."""
    u = np.asarray(u, dtype=float)
    P = projector_upper(u, metric)

    def f(xi: Array) -> float:
        uxi = float(u @ xi)
        return uxi * uxi - cs2 * float(xi @ P @ xi)

    return f
