"""Diagnostics for the gas-vacuum free boundary on 1D sampled fields.

The polytropic gas p = rho^(kappa+1) is written in the good variables
r = ((kappa+1)/kappa) rho^kappa and v = (1 + rho^kappa)^(1+1/kappa) u, with r
vanishing like the distance to the boundary. Fields depend on a single
coordinate x; spatial vectors keep three components with d/dy = d/dz = 0.

Reference closures for the diagonal system (derived here from the Euler
equations in (r, v); F = 1 + kappa r/(kappa+1)):
    a2 = F^(1+2/kappa) / v0
    a1 = -2 kappa F^(2+2/kappa) / (a0 v0^3)

Classes:
    DiagonalState, WeightedNormSpec, LinearizedPair, HbarInverse, EnergyResult

Functions:
    to_diagonal, from_diagonal, v0_from_constraint, hbar_inverse, diagonal_residual,
    weighted_norm, script_H_norm, critical_piece, linearized_energy, good_linear_vars,
    control_norms, distance_functional
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
import numpy.typing as npt

from .errors import (ConstraintViolation, GridTooLarge, InadmissibleSigma, InsufficientTimeLevels,
                     KappaMismatch, LostPositivity, MissingClosure, NegativeDensity, SchemaError)

Array = npt.NDArray[np.float64]

PAIRWISE_CAP = 4096


def _vec3(v, n_shape) -> Array:
    """Accept v as (n,) (x-component only) or (3, ...) and return (3, ...)."""
    v = np.asarray(v, dtype=float)
    if v.shape == tuple(n_shape):
        z = np.zeros_like(v)
        return np.stack([v, z, z])
    if v.shape[0] != 3:
        raise SchemaError(f"velocity must have shape {tuple(n_shape)} or (3, ...), got {v.shape}")
    return v


def _F(r, kappa):
    return 1.0 + kappa * np.asarray(r, dtype=float) / (kappa + 1.0)


def v0_from_constraint(r, v_spatial, kappa: float):
    """v0 = sqrt(F^(2+2/kappa) + |v|^2) with F = 1 + kappa r/(kappa+1)."""
    r = np.asarray(r, dtype=float)
    v = _vec3(v_spatial, r.shape) if np.ndim(v_spatial) else np.asarray([v_spatial, 0.0, 0.0])
    out = np.sqrt(_F(r, kappa) ** (2.0 + 2.0 / kappa) + np.sum(v * v, axis=0))
    return float(out) if out.ndim == 0 else out


@dataclass
class DiagonalState:
    """(r, v) on a 1D grid ``x``; ``v`` holds the three spatial components."""

    r: Array
    v: Array
    kappa: float
    x: Array
    ratio_bounds: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        self.r = np.asarray(self.r, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.v = _vec3(self.v, self.r.shape)
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")
        if self.r.shape != self.x.shape or self.v.shape[1:] != self.r.shape:
            raise SchemaError("r, v and x must share the grid")
        if np.any(self.r < 0):
            raise NegativeDensity("r must be nonnegative")
        if self.ratio_bounds is not None:
            c1, c2 = self.ratio_bounds
            d = boundary_distance(self.r, self.x)
            inside = (self.r > 0) & (d > 0)
            ratio = self.r[inside] / d[inside]
            if ratio.size and (ratio.min() < c1 or ratio.max() > c2):
                raise ConstraintViolation(f"r/dist outside [{c1}, {c2}]: [{ratio.min():.3g}, {ratio.max():.3g}]")

    @property
    def v0(self) -> Array:
        return v0_from_constraint(self.r, self.v, self.kappa)

    @property
    def v4(self) -> Array:
        return np.concatenate([self.v0[None], self.v])

    @property
    def support(self) -> Array:
        return self.r > 0


def boundary_distance(r: Array, x: Array) -> Array:
    """Distance from each grid point to the nearest point where r vanishes (inf if none)."""
    zeros = x[r <= 0]
    if zeros.size == 0:
        return np.full_like(x, np.inf)
    return np.min(np.abs(x[:, None] - zeros[None, :]), axis=1)


@dataclass
class WeightedNormSpec:
    N: int
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma <= -0.5:
            raise InadmissibleSigma(f"sigma = {self.sigma} must exceed -1/2")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError("N must be a nonnegative integer")
        self.N = int(self.N)


@dataclass
class LinearizedPair:
    s: Array
    w: Array

    def __post_init__(self) -> None:
        self.s = np.asarray(self.s, dtype=float)
        self.w = _vec3(self.w, self.s.shape)


def to_diagonal(rho, u, kappa: float, x: Optional[Array] = None) -> DiagonalState:
    """r = ((kappa+1)/kappa) rho^kappa, v = (1 + rho^kappa)^(1+1/kappa) u (spatial part kept).

    ``u`` is a four-velocity of shape (4, ...).
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(rho < 0):
        raise NegativeDensity("rho must be nonnegative")
    rk = rho**kappa
    v = (1.0 + rk) ** (1.0 + 1.0 / kappa) * u[1:]
    r = (kappa + 1.0) / kappa * rk
    if x is None:
        x = np.linspace(0.0, 1.0, r.size).reshape(r.shape) if r.ndim else np.zeros(())
    if r.ndim == 0:
        return DiagonalState(r[None], v[:, None], kappa, np.atleast_1d(x))
    return DiagonalState(r, v, kappa, x)


def from_diagonal(state: DiagonalState) -> tuple[Array, Array]:
    """Inverse of ``to_diagonal``: returns (rho, u) with u a (4, n) four-velocity."""
    k = state.kappa
    rk = k * state.r / (k + 1.0)
    rho = rk ** (1.0 / k)
    u = state.v4 / (1.0 + rk) ** (1.0 + 1.0 / k)
    return rho, u


@dataclass
class HbarInverse:
    """Pointwise inverse metric (3, 3, n) with a0, a2, v0 and its eigenvalue range."""

    hinv: Array
    a0: Array
    a2: Array
    v0: Array
    eig_min: Array
    eig_max: Array


def reference_a2(r, v, v0, a0, kappa):
    return _F(r, kappa) ** (1.0 + 2.0 / kappa) / v0


def reference_a1(r, v, v0, a0, kappa):
    return -2.0 * kappa * _F(r, kappa) ** (2.0 + 2.0 / kappa) / (a0 * v0**3)


REFERENCE_CLOSURES: dict[str, Callable] = {"a1": reference_a1, "a2": reference_a2}


def hbar_inverse(r, v, kappa: float, closures: Mapping[str, Callable] = REFERENCE_CLOSURES) -> HbarInverse:
    """(Hbar^-1)^{ij} = kappa F/(a0 v0) (delta^ij - v^i v^j / v0^2), a0 = 1 - kappa r |v|^2/v0^2.

    Eigenvalues are kappa F/(a0 v0) (double) and kappa F/(a0 v0) (1 - |v|^2/v0^2).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    v = _vec3(np.asarray(v, dtype=float).reshape((3,) + r.shape) if np.size(v) == 3 * r.size else v, r.shape)
    v0 = v0_from_constraint(r, v, kappa)
    vv = np.sum(v * v, axis=0)
    a0 = 1.0 - kappa * r * vv / v0**2
    if np.any(a0 <= 0):
        raise LostPositivity("a0 <= 0: state outside the diagonal regime")
    pref = kappa * _F(r, kappa) / (a0 * v0)
    hinv = pref * (np.eye(3)[(...,) + (None,) * r.ndim] - np.einsum("i...,j...->ij...", v, v) / v0**2)
    a2 = closures["a2"](r, v, v0, a0, kappa) if "a2" in closures else np.full_like(r, np.nan)
    lo = pref * (1.0 - vv / v0**2)
    return HbarInverse(hinv, a0, a2, v0, np.minimum(lo, pref), np.maximum(lo, pref))


def _dt(a: Array, dt: float, axis: int = -2) -> Array:
    return np.gradient(a, dt, axis=axis, edge_order=2)


def _dx(a: Array, dx: float, periodic: bool) -> Array:
    if periodic:
        return (np.roll(a, -1, -1) - np.roll(a, 1, -1)) / (2.0 * dx)
    return np.gradient(a, dx, axis=-1, edge_order=2)


def diagonal_residual(r: Array, v: Array, kappa: float, dt: float, dx: float, periodic: bool = False,
                      r_min: float = 0.0, closures: Optional[Mapping[str, Callable]] = None) -> dict:
    """Max-norms of D_t r + r Hbar^ij d_i v_j + r a1 v^i d_i r and D_t v_i + a2 d_i r.

    ``r`` has shape (nt, nx) and ``v`` shape (3, nt, nx) or (nt, nx). Norms are taken on
    interior time levels, interior x points when not periodic, and where r >= r_min.
    """
    closures = REFERENCE_CLOSURES if closures is None else closures
    if "a1" not in closures or "a2" not in closures:
        raise MissingClosure("diagonal residual needs both a1 and a2 closures")
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] < 3:
        raise InsufficientTimeLevels("diagonal residual needs >= 3 time levels on a (t, x) grid")
    v = _vec3(v, r.shape)
    H = hbar_inverse(r, v, kappa, closures)
    a1 = closures["a1"](r, v, H.v0, H.a0, kappa)
    rt, rx = _dt(r, dt), _dx(r, dx, periodic)
    vt, vx = _dt(v, dt), _dx(v, dx, periodic)
    c = v[0] / H.v0
    R1 = rt + c * rx + r * np.einsum("i...,i...->...", H.hinv[:, 0], vx) + r * a1 * v[0] * rx
    R2 = vt + c * vx
    R2[0] = R2[0] + H.a2 * rx
    mask = np.zeros(r.shape, bool)
    mask[1:-1, :] = True
    if not periodic:
        mask[:, 0] = mask[:, -1] = False
    mask &= r >= r_min
    if not mask.any():
        return {"r_eq": 0.0, "v_eq": 0.0, "points": 0}
    return {"r_eq": float(np.max(np.abs(R1[mask]))), "v_eq": float(np.max(np.abs(R2[:, mask]))),
            "points": int(mask.sum())}


def _weights(r: Array, sigma: float) -> tuple[Array, Array]:
    """Pointwise r^sigma with the boundary rule and a mask of included points."""
    r = np.asarray(r, dtype=float)
    include = r >= 0
    if sigma < 0:
        include = include & (r > 0)
    w = np.zeros_like(r)
    with np.errstate(divide="ignore"):
        w[include] = r[include] ** sigma if sigma != 0 else 1.0
    return w, include


def _quad(integrand: Array, x: Array, include: Array) -> tuple[float, float]:
    """Trapezoid over maximal runs of included points; returns (integral, excluded measure)."""
    total, covered = 0.0, 0.0
    idx = np.flatnonzero(include)
    if idx.size == 0:
        return 0.0, float(x[-1] - x[0])
    breaks = np.flatnonzero(np.diff(idx) > 1)
    for seg in np.split(idx, breaks + 1):
        if seg.size >= 2:
            total += float(np.trapezoid(integrand[seg], x[seg]))
            covered += float(x[seg[-1]] - x[seg[0]])
    return total, float(x[-1] - x[0]) - covered


def _derivs(f: Array, x: Array, order: int) -> Array:
    out = f
    for _ in range(order):
        out = np.gradient(out, x, axis=-1, edge_order=2)
    return out


def weighted_norm(f, r, spec: WeightedNormSpec, x: Array, return_excluded: bool = False):
    """sqrt(sum_{k<=N} || r^sigma d^k f ||^2_L2) by trapezoid quadrature over {r >= 0}.

    Scalars have shape (n,); vector fields (3, n) sum their components. Where
    sigma < 0 the points with r = 0 are excluded and their measure reported.
    """
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    w, include = _weights(r, spec.sigma)
    integrand = np.zeros_like(x)
    for k in range(spec.N + 1):
        d = _derivs(f, x, k)
        sq = d * d if d.ndim == 1 else np.sum(d * d, axis=0)
        integrand = integrand + w * w * sq
    val, excluded = _quad(integrand, x, include)
    norm = float(np.sqrt(max(val, 0.0)))
    return (norm, excluded) if return_excluded else norm


def script_exponents(kappa: float, N: float) -> tuple[float, float]:
    """Weight exponents ((1-kappa)/(2 kappa) + N, (1-kappa)/(2 kappa) + N + 1/2)."""
    s = (1.0 - kappa) / (2.0 * kappa) + N
    return s, s + 0.5


def script_H_norm(s, w, r, x, kappa: float, N: float) -> float:
    """Norm on H^{2N, sigma_s} x H^{2N, sigma_s + 1/2}; 2N must be an integer."""
    if abs(2 * N - round(2 * N)) > 1e-12:
        raise ValueError("2N must be an integer")
    k = int(round(2 * N))
    ss, sv = script_exponents(kappa, N)
    ns = weighted_norm(s, r, WeightedNormSpec(k, ss), x)
    nv = weighted_norm(_vec3(w, np.shape(s)), r, WeightedNormSpec(k, sv), x)
    return float(np.sqrt(ns**2 + nv**2))


def critical_piece(state: DiagonalState, transverse_area: float = 1.0) -> float:
    """Squared top-order homogeneous piece of the critical norm, 2N0 = 4 + 1/kappa.

    Only the terms with exactly 2N0 derivatives are kept. The 1D integral is
    multiplied by ``transverse_area`` for a planar field in three dimensions.
    """
    k2 = 4.0 + 1.0 / state.kappa
    if abs(k2 - round(k2)) > 1e-12:
        raise ValueError(f"2N0 = {k2} is not an integer for kappa = {state.kappa}")
    k = int(round(k2))
    ss, sv = script_exponents(state.kappa, k2 / 2.0)
    total = 0.0
    for f, sig in ((state.r, ss), (state.v, sv)):
        w, include = _weights(state.r, sig)
        d = _derivs(f, state.x, k)
        sq = d * d if d.ndim == 1 else np.sum(d * d, axis=0)
        total += _quad(w * w * sq, state.x, include)[0]
    return transverse_area * total


@dataclass
class EnergyResult:
    E: float
    bracket: tuple[float, float]
    h0_norm_sq: float
    excluded_measure: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        c1, c2 = self.bracket
        tol = 1e-12 * max(1.0, abs(self.E))
        return c1 * self.h0_norm_sq - tol <= self.E <= c2 * self.h0_norm_sq + tol


def linearized_energy(pair: LinearizedPair, background: DiagonalState, a2=None, hinv=None) -> EnergyResult:
    """E = 1/2 int r^((1-kappa)/kappa) (s^2 + r Hbar^ij w_i w_j / a2) dx with its H^0 bracket.

    ``a2`` and ``hinv`` override the background values (scalar, (n,) or (3, 3, n)).
    The bracket is c1 = min(1, min eig/a2)/2 and c2 = max(1, max eig/a2)/2 so that
    c1 ||(s, w)||^2 <= E <= c2 ||(s, w)||^2 pointwise and therefore after quadrature.
    """
    k, r, x = background.kappa, background.r, background.x
    n = r.size
    if hinv is None or a2 is None:
        H = hbar_inverse(r, background.v, k)
        hinv = H.hinv if hinv is None else hinv
        a2 = H.a2 if a2 is None else a2
    hinv = np.asarray(hinv, dtype=float)
    if hinv.shape == (3, 3):
        hinv = np.broadcast_to(hinv[..., None], (3, 3, n))
    a2 = np.broadcast_to(np.asarray(a2, dtype=float), (n,))
    if np.any(~np.isfinite(a2)):
        raise MissingClosure("a2 closure unavailable")
    if np.any(a2 <= 0):
        raise LostPositivity("a2 must be positive")
    eig = np.linalg.eigvalsh(np.moveaxis(hinv, -1, 0))
    w0, include = _weights(r, (1.0 - k) / k)
    quad_w = pair.w
    wHw = np.einsum("ij...,i...,j...->...", hinv, quad_w, quad_w)
    ww = np.sum(quad_w * quad_w, axis=0)
    E, excl = _quad(0.5 * w0 * (pair.s**2 + r * wHw / a2), x, include)
    h0, _ = _quad(w0 * (pair.s**2 + r * ww), x, include)
    ratio_lo = eig[:, 0] / a2
    ratio_hi = eig[:, -1] / a2
    sel = include
    c1 = 0.5 * min(1.0, float(ratio_lo[sel].min())) if sel.any() else 0.5
    c2 = 0.5 * max(1.0, float(ratio_hi[sel].max())) if sel.any() else 0.5
    return EnergyResult(E, (c1, c2), h0, excl)


def good_linear_vars(r: Array, v: Array, kappa: float, dt: float, dx: float, ell: int,
                     periodic: bool = False) -> tuple[Array, Array]:
    """(s_ell, w_ell) for ell <= 2 on a (t, x) sample; D_t = d_t + (v^i/v0) d_i.

    s0 = r, w0 = v; s1 = d_t r, w1 = d_t v;
    s2 = D_t^2 r + a0 a2 /(2 kappa F) Hbar^ij d_i r d_j r, w2 = D_t^2 v.
    """
    if ell not in (0, 1, 2):
        raise ValueError("only ell <= 2 is supported")
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] < 3:
        raise InsufficientTimeLevels("good linear variables need >= 3 time levels on a (t, x) grid")
    v = _vec3(v, r.shape)
    if ell == 0:
        return r.copy(), v.copy()
    if ell == 1:
        return _dt(r, dt), _dt(v, dt)
    H = hbar_inverse(r, v, kappa)
    c = v[0] / H.v0

    def Dt(f):
        return _dt(f, dt) + c * _dx(f, dx, periodic)

    rx = _dx(r, dx, periodic)
    corr = 0.5 * H.a0 * H.a2 / (kappa * _F(r, kappa)) * H.hinv[0, 0] * rx * rx
    return Dt(Dt(r)) + corr, Dt(Dt(v))


def _holder_pairs(f: Array, x: Array, denom_fn) -> float:
    n = x.size
    if n > PAIRWISE_CAP:
        raise GridTooLarge(f"pairwise seminorm limited to {PAIRWISE_CAP} points, got {n}")
    f = f if f.ndim == 2 else f[None]
    best = 0.0
    for i in range(n - 1):
        diff = np.sqrt(np.sum((f[:, i + 1:] - f[:, i:i + 1]) ** 2, axis=0))
        den = denom_fn(i, np.arange(i + 1, n))
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(den > 0, diff / den, 0.0)
        best = max(best, float(q.max()))
    return best


def control_norms(state: DiagonalState, N_field=None) -> tuple[float, float]:
    """A = max|grad r - N| + [v]_{C^1/2}, B = A + [grad r]_{C~^1/2} + max|grad v| over {r > 0}.

    ``N_field`` is a constant or per-point x-component of the auxiliary field;
    by default it is grad r at the first boundary point (r = 0), or at the
    first grid point when no boundary point is sampled.
    """
    x, r = state.x, state.r
    dr = np.gradient(r, x, edge_order=2)
    dv = np.gradient(state.v, x, axis=-1, edge_order=2)
    if N_field is None:
        zeros = np.flatnonzero(r <= 0)
        N_field = dr[zeros[0]] if zeros.size else dr[0]
    N_field = np.broadcast_to(np.asarray(N_field, dtype=float), r.shape)
    sup = np.flatnonzero(r >= 0)
    xs, rs = x[sup], r[sup]
    A = float(np.max(np.abs(dr[sup] - N_field[sup])))
    A += _holder_pairs(state.v[:, sup], xs, lambda i, j: np.sqrt(np.abs(xs[j] - xs[i])))
    sq = np.sqrt(rs)
    B = A + _holder_pairs(dr[sup], xs, lambda i, j: sq[i] + sq[j] + np.sqrt(np.abs(xs[j] - xs[i])))
    B += float(np.max(np.sqrt(np.sum(dv[:, sup] ** 2, axis=0))))
    return A, B


def distance_functional(a: DiagonalState, b: DiagonalState) -> float:
    """int (r1+r2)^((1-kappa)/kappa) ((r1-r2)^2 + (r1+r2)|v1-v2|^2) dx over the common support."""
    if a.kappa != b.kappa:
        raise KappaMismatch(f"kappa {a.kappa} != {b.kappa}")
    if a.x.shape != b.x.shape or np.max(np.abs(a.x - b.x)) > 1e-12 * max(1.0, np.max(np.abs(a.x))):
        raise SchemaError("states must share the grid")
    k = a.kappa
    S = a.r + b.r
    common = (a.r > 0) & (b.r > 0)
    # closure of the common support: boundary neighbours enter with their finite weight
    include = common | np.roll(common, 1) & ~(np.arange(S.size) == 0) | np.roll(common, -1) & ~(np.arange(S.size) == S.size - 1)
    include &= S > 0 if k > 1 else np.ones_like(common)
    w = np.zeros_like(S)
    w[include] = S[include] ** ((1.0 - k) / k) if k > 1 else 1.0
    dv2 = np.sum((a.v - b.v) ** 2, axis=0)
    integrand = w * ((a.r - b.r) ** 2 + S * dv2)
    return _quad(integrand, a.x, include)[0]
