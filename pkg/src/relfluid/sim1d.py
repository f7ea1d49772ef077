"""1+1D finite-volume solver for special-relativistic fluids with optional bulk viscosity.

Conserved variables per cell are E = T^00, S = T^01, D = J^0 and, with bulk
viscosity, B = u^0 P. Fluxes are T^01, T^11, n u^1 and P u^1. The scheme is
HLL with piecewise-linear reconstruction of the primitives (rho, n, v, P),
minmod-limited by default and unlimited with ``limiter="none"`` for smooth
convergence studies, and two-stage SSP Runge-Kutta. Bulk relaxation is Strang split around the
advection step.

Classes:
    Grid1D, PrimitiveState, ConservedState, BulkCoefficients, Trajectory

Functions:
    prim2con, con2prim, signal_speeds, evolve, initial_condition, bjorken_oracle,
    self_convergence_order
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import numpy.typing as npt
from scipy.integrate import solve_ivp

from .errors import CausalityBreach, CFLViolation, Con2PrimFailure, ConfigError, SuperluminalInput
from .grid import GridField
from .thermo import EquationOfState

Array = npt.NDArray[np.float64]

MAX_CFL = 0.4


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of cell centers on [0, length)."""

    n_cells: int
    length: float = 1.0
    periodic: bool = True

    def __post_init__(self) -> None:
        if self.n_cells < 8:
            raise ConfigError("n_cells must be at least 8")
        if not self.length > 0:
            raise ConfigError("length must be positive")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def x(self) -> Array:
        return (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass
class PrimitiveState:
    rho: Array
    n: Array
    v: Array
    P_bulk: Array = None

    def __post_init__(self) -> None:
        self.rho = np.asarray(self.rho, dtype=float)
        self.n = np.asarray(self.n, dtype=float) * np.ones_like(self.rho)
        self.v = np.asarray(self.v, dtype=float) * np.ones_like(self.rho)
        self.P_bulk = np.zeros_like(self.rho) if self.P_bulk is None else np.asarray(self.P_bulk, float) * np.ones_like(self.rho)

    @property
    def lorentz(self) -> Array:
        return 1.0 / np.sqrt(1.0 - self.v * self.v)

    def copy(self) -> "PrimitiveState":
        return PrimitiveState(self.rho.copy(), self.n.copy(), self.v.copy(), self.P_bulk.copy())


@dataclass
class ConservedState:
    E: Array
    S: Array
    D: Array
    B: Array = None

    def __post_init__(self) -> None:
        self.B = np.zeros_like(self.E) if self.B is None else self.B

    def stack(self) -> Array:
        return np.stack([self.E, self.S, self.D, self.B])

    @classmethod
    def from_stack(cls, U: Array) -> "ConservedState":
        return cls(U[0].copy(), U[1].copy(), U[2].copy(), U[3].copy())

    def totals(self) -> Array:
        return np.array([self.E.sum(), self.S.sum(), self.D.sum()])


@dataclass(frozen=True)
class BulkCoefficients:
    """Bulk relaxation coefficients; ``None`` in place of this record means ideal flow."""

    zeta: float = 0.0
    tau_P: float = 1.0
    delta_PP: float = 0.0

    @classmethod
    def from_mapping(cls, m: Optional[dict]) -> Optional["BulkCoefficients"]:
        if not m:
            return None
        return cls(float(m.get("zeta", 0.0)), float(m.get("tau_P", 1.0)), float(m.get("delta_PP", 0.0)))


def prim2con(prim: PrimitiveState, eos: EquationOfState) -> ConservedState:
    """T^00 = (rho + p + P) W^2 - (p + P), T^01 = (rho + p + P) W^2 v, J^0 = n W, B = W P."""
    if np.any(np.abs(prim.v) >= 1.0):
        raise SuperluminalInput("|v| must be below 1")
    W = prim.lorentz
    Pi = eos.pressure(prim.rho, prim.n) + prim.P_bulk
    wW2 = (prim.rho + Pi) * W * W
    return ConservedState(wW2 - Pi, wW2 * prim.v, prim.n * W, prim.P_bulk * W)


def con2prim(cons: ConservedState, eos: EquationOfState, guess: Optional[Array] = None,
             tol: float = 1e-12, max_iter: int = 100) -> PrimitiveState:
    """Invert prim2con by Newton iteration on the effective pressure Pi = p + P.

    For a trial Pi: v = S/(E + Pi), rho = E - S v, n = D/W, P = B/W, and the
    residual is Pi - P - p(rho, n). Steps that leave the admissible set
    E + Pi > |S| are halved.
    """
    E, S, D, B = (np.asarray(a, dtype=float) for a in (cons.E, cons.S, cons.D, cons.B))
    if np.any(E <= np.abs(S)):
        bad = int(np.argmax(E <= np.abs(S)))
        raise Con2PrimFailure(f"cell {bad}: T00 = {E[bad]!r} <= |T01| = {abs(S[bad])!r}")
    floor = np.abs(S) - E
    if guess is None:
        Pi = np.maximum(eos.pressure(np.maximum(E, 0.0), np.minimum(D, E) if not eos.barotropic else None), 0.0)
        Pi = np.maximum(Pi, floor + 1e-3 * E)
    else:
        Pi = np.maximum(np.asarray(guess, float), floor + 1e-14 * E)

    def parts(Pi):
        v = S / (E + Pi)
        iW = np.sqrt(1.0 - v * v)
        rho = E - S * v
        n = D * iW
        P = B * iW
        return v, iW, rho, n, P

    for _ in range(max_iter):
        v, iW, rho, n, P = parts(Pi)
        f = Pi - P - eos.pressure(np.maximum(rho, 0.0), n if not eos.barotropic else None)
        dv = -v / (E + Pi)
        diW = -v / iW * dv
        df = 1.0 - B * diW - eos.dp_drho(rho, n) * (-S * dv) - eos.dp_dn(rho, n) * (D * diW)
        step = f / df
        new = Pi - step
        for _ in range(60):
            bad = new <= floor
            if not np.any(bad):
                break
            step = np.where(bad, 0.5 * step, step)
            new = Pi - step
        Pi = new
        if np.all(np.abs(step) <= tol * (1.0 + np.abs(Pi))):
            v, iW, rho, n, P = parts(Pi)
            return PrimitiveState(rho, n, v, P)
    worst = int(np.argmax(np.abs(step) / (1.0 + np.abs(Pi))))
    raise Con2PrimFailure(f"no convergence after {max_iter} iterations at cell {worst}: "
                          f"E={E[worst]!r} S={S[worst]!r} D={D[worst]!r}")


def effective_cs2(prim: PrimitiveState, eos: EquationOfState, bulk: Optional[BulkCoefficients]) -> Array:
    """cs^2 with the bulk correction (zeta + delta_PP P)/(tau_P (rho + p + P)).

    Raises CausalityBreach above 1; values within rounding of 1 are clipped.
    """
    P = prim.P_bulk if bulk is not None else 0.0
    cs2 = eos.sound_speed_sq(prim.rho, prim.n, bulk=P)
    if bulk is not None:
        w = prim.rho + eos.pressure(prim.rho, prim.n) + P
        cs2 = cs2 + (bulk.zeta + bulk.delta_PP * P) / (bulk.tau_P * w)
    if np.any(cs2 > 1.0 + 1e-12):
        raise CausalityBreach(f"effective cs^2 = {float(np.max(cs2))!r} > 1")
    return np.clip(cs2, 0.0, 1.0)


def signal_speeds(v: Array, cs2: Array) -> tuple[Array, Array]:
    """Exact 1D characteristic speeds (v -+ cs)/(1 -+ v cs) of the sound roots."""
    cs = np.sqrt(cs2)
    return (v - cs) / (1.0 - v * cs), (v + cs) / (1.0 + v * cs)


def _limited_slope(q: Array, limiter: str) -> Array:
    dl = q - np.roll(q, 1)
    dr = np.roll(q, -1) - q
    if limiter == "none":
        return 0.5 * (dl + dr)
    if limiter == "minmod":
        return np.where(dl * dr > 0, np.sign(dl) * np.minimum(np.abs(dl), np.abs(dr)), 0.0)
    raise ConfigError(f"unknown limiter {limiter!r}")


def _flux(prim: PrimitiveState, eos: EquationOfState) -> tuple[Array, Array]:
    cons = prim2con(prim, eos)
    p = eos.pressure(prim.rho, prim.n)
    Pi = p + prim.P_bulk
    W = prim.lorentz
    v = prim.v
    F = np.stack([cons.S, (prim.rho + Pi) * W * W * v * v + Pi, cons.D * v, cons.B * v])
    return cons.stack(), F


def _rhs(U: Array, prim: PrimitiveState, eos: EquationOfState, dx: float, limiter: str,
         bulk: Optional[BulkCoefficients]) -> Array:
    qs = [prim.rho, prim.n, prim.v, prim.P_bulk]
    slopes = [_limited_slope(q, limiter) for q in qs]
    left = PrimitiveState(*[q + 0.5 * s for q, s in zip(qs, slopes)])  # state left of face i+1/2
    right = PrimitiveState(*[np.roll(q - 0.5 * s, -1) for q, s in zip(qs, slopes)])
    UL, FL = _flux(left, eos)
    UR, FR = _flux(right, eos)
    lmL, lpL = signal_speeds(left.v, effective_cs2(left, eos, bulk))
    lmR, lpR = signal_speeds(right.v, effective_cs2(right, eos, bulk))
    sL = np.minimum(np.minimum(lmL, lmR), 0.0)
    sR = np.maximum(np.maximum(lpL, lpR), 0.0)
    Fh = (sR * FL - sL * FR + sL * sR * (UR - UL)) / (sR - sL)
    return -(Fh - np.roll(Fh, 1, axis=1)) / dx


def _relax(U: Array, prim: PrimitiveState, theta: Array, bulk: BulkCoefficients, dt: float) -> Array:
    """Exact update of the bulk density B over dt with theta = div u frozen.

    With B = u^0 P the split source reads u^0 dP/dt = P theta - (P (1 + delta theta) + zeta theta)/tau_P,
    linear in P for frozen theta, so the update is an exponential.
    """
    W = prim.lorentz
    k = (1.0 + bulk.delta_PP * theta - bulk.tau_P * theta) / (bulk.tau_P * W)
    f = bulk.zeta * theta / (bulk.tau_P * W)
    P0 = prim.P_bulk
    small = np.abs(k * dt) < 1e-8
    ks = np.where(small, 1.0, k)
    P_inf = -f / ks
    P1 = np.where(small, P0 - (k * P0 + f) * dt, P_inf + (P0 - P_inf) * np.exp(-ks * dt))
    out = U.copy()
    out[3] = W * P1
    return out


@dataclass
class Trajectory:
    """Snapshots of a run: times and primitive arrays stacked along time."""

    grid: Grid1D
    eos: EquationOfState
    times: list[float] = field(default_factory=list)
    snapshots: list[PrimitiveState] = field(default_factory=list)
    totals: list[Array] = field(default_factory=list)
    audits: list = field(default_factory=list)
    steps: int = 0
    dt: float = 0.0

    def to_gridfield(self, meta: Optional[dict] = None) -> GridField:
        """(t, x) GridField with rho, n, v, P_bulk, p and, for the ideal gas, s.

        The time axis is uniform only when snapshots were taken every fixed number
        of steps; the spacing stored is that of the first interval.
        """
        rho = np.stack([s.rho for s in self.snapshots])
        n = np.stack([s.n for s in self.snapshots])
        fields = {"rho": rho, "n": n, "v": np.stack([s.v for s in self.snapshots]),
                  "P_bulk": np.stack([s.P_bulk for s in self.snapshots]),
                  "p": self.eos.pressure(rho, n if not self.eos.barotropic else None)}
        if self.eos.kind == "ideal-gas":
            fields["s"] = self.eos.entropy(rho, n)
        dt = self.times[1] - self.times[0] if len(self.times) > 1 else 1.0
        m = {"eos": self.eos.to_config(), "times": list(self.times), "t0": self.times[0]}
        m.update(meta or {})
        return GridField((len(self.times), self.grid.n_cells), (dt, self.grid.dx), fields, (False, True), m)


def evolve(grid: Grid1D, cons: ConservedState | PrimitiveState, eos: EquationOfState,
           coeffs: Optional[BulkCoefficients] = None, t_end: float = 0.1, cfl: float = MAX_CFL,
           limiter: str = "minmod", output_every: int = 0,
           audit: Optional[Callable[[float, PrimitiveState], object]] = None) -> Trajectory:
    """Advance the conserved state to ``t_end`` on a periodic grid.

    The number of steps is the smallest for which the uniform step
    dt = t_end / n_steps stays below cfl dx (signal speeds never exceed one).
    Snapshots are stored at t = 0, every ``output_every`` steps (0 means only the final state) and at ``t_end``.
    With ``coeffs`` the bulk relaxation is Strang split: half advection,
    full relaxation, half advection.
    """
    if cfl > MAX_CFL:
        raise CFLViolation(f"cfl = {cfl} exceeds {MAX_CFL}")
    if not grid.periodic:
        raise ConfigError("only periodic grids are supported")
    if isinstance(cons, PrimitiveState):
        prim = cons.copy()
        cons = prim2con(prim, eos)
    else:
        prim = con2prim(cons, eos)
    if coeffs is None and np.any(prim.P_bulk != 0):
        raise ConfigError("nonzero bulk pressure without bulk coefficients")
    U = cons.stack()
    dx = grid.dx
    n_steps = max(1, int(np.ceil(t_end / (cfl * dx) - 1e-9)))
    dt = t_end / n_steps
    traj = Trajectory(grid, eos, dt=dt)

    def record(t, prim, U):
        traj.times.append(float(t))
        traj.snapshots.append(prim.copy())
        traj.totals.append(U[:3].sum(axis=1))
        if audit is not None:
            traj.audits.append(audit(t, prim))

    def to_prim(U, guess):
        return con2prim(ConservedState.from_stack(U), eos, guess=guess)

    def advect(U, prim, dt):
        Pi = eos.pressure(prim.rho, prim.n) + prim.P_bulk
        U1 = U + dt * _rhs(U, prim, eos, dx, limiter, coeffs)
        p1 = to_prim(U1, Pi)
        U2 = 0.5 * (U + U1 + dt * _rhs(U1, p1, eos, dx, limiter, coeffs))
        return U2, to_prim(U2, eos.pressure(p1.rho, p1.n) + p1.P_bulk)

    record(0.0, prim, U)
    for step in range(1, n_steps + 1):
        if coeffs is None:
            U, prim = advect(U, prim, dt)
        else:
            W0 = prim.lorentz
            Uh, ph = advect(U, prim, 0.5 * dt)
            u1 = ph.lorentz * ph.v
            theta = 2.0 * (ph.lorentz - W0) / dt + (np.roll(u1, -1) - np.roll(u1, 1)) / (2 * dx)
            Ur = _relax(Uh, ph, theta, coeffs, dt)
            pr = to_prim(Ur, eos.pressure(ph.rho, ph.n) + ph.P_bulk)
            U, prim = advect(Ur, pr, 0.5 * dt)
        if (output_every and step % output_every == 0) or step == n_steps:
            record(step * dt, prim, U)
    traj.steps = n_steps
    return traj


def initial_condition(grid: Grid1D, eos: EquationOfState, kind: str, params: Optional[dict] = None) -> PrimitiveState:
    """Smooth periodic initial data.

    Kinds:
        bump: rho = rho0 (1 + amp exp((cos(2 pi (x - x0)/L) - 1)/width^2)), uniform v0;
            for the ideal gas an entropy profile s = s0 + s_amp sin(2 pi x/L) is added.
        simple-wave: right-moving conformal simple wave, atanh(v) = (sqrt(3)/4) log(rho/rho0).
        custom-table: arrays ``rho``, ``v`` and optionally ``n`` and ``P_bulk`` of length n_cells.
    """
    p = dict(params or {})
    x, L = grid.x, grid.length
    if kind == "bump":
        rho0, amp = float(p.get("rho0", 1.0)), float(p.get("amp", 0.1))
        width, x0 = float(p.get("width", 0.5)), float(p.get("x0", 0.5 * L))
        rho = rho0 * (1.0 + amp * np.exp((np.cos(2 * np.pi * (x - x0) / L) - 1.0) / width**2))
        v = np.full_like(x, float(p.get("v0", 0.0)))
        if eos.kind == "ideal-gas":
            s = float(p.get("s0", 0.0)) + float(p.get("s_amp", 0.0)) * np.sin(2 * np.pi * x / L)
            n = eos.density_from_entropy(rho, s)
        else:
            n = _barotropic_n(eos, rho)
        return PrimitiveState(rho, n, v)
    if kind == "simple-wave":
        if eos.kind != "conformal":
            raise ConfigError("simple-wave initial data assumes the conformal eos")
        rho0, amp = float(p.get("rho0", 1.0)), float(p.get("amp", 0.2))
        rho = rho0 * (1.0 + amp * np.sin(2 * np.pi * x / L))
        v = np.tanh(np.sqrt(3.0) / 4.0 * np.log(rho / rho0))
        return PrimitiveState(rho, _barotropic_n(eos, rho), v)
    if kind == "custom-table":
        try:
            rho = np.asarray(p["rho"], float)
            v = np.asarray(p["v"], float)
        except KeyError as exc:
            raise ConfigError(f"custom-table needs {exc}") from exc
        if rho.shape != (grid.n_cells,) or v.shape != (grid.n_cells,):
            raise ConfigError("custom-table arrays must have n_cells entries")
        n = np.asarray(p["n"], float) if "n" in p else _barotropic_n(eos, rho)
        return PrimitiveState(rho, n, v, np.asarray(p.get("P_bulk", 0.0), float))
    raise ConfigError(f"unknown initial condition kind {kind!r}")


def _barotropic_n(eos: EquationOfState, rho: Array) -> Array:
    if eos.kind == "polytropic":
        return rho / (1.0 + rho**eos.kappa) ** (1.0 / eos.kappa)
    if eos.kind == "conformal":
        return rho**0.75
    return np.ones_like(rho)


def bjorken_oracle(rho0: float, tau0: float, tau, coeffs: Optional[BulkCoefficients] = None,
                   mode: str = "ideal-conformal", P0: float = 0.0, eos: Optional[EquationOfState] = None,
                   rtol: float = 1e-10) -> tuple[Array, Array]:
    """Boost-invariant 0+1D flow: returns (rho, P_bulk) at the proper times ``tau``.

    ``ideal-conformal`` uses rho0 (tau0/tau)^(4/3). ``bulk`` integrates
    d rho/d tau = -(rho + p + P)/tau and tau_P dP/dtau = -P - zeta/tau - delta_PP P/tau
    with an adaptive Runge-Kutta method.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau < tau0) or tau0 <= 0:
        raise ConfigError("need tau >= tau0 > 0")
    if mode == "ideal-conformal":
        return rho0 * (tau0 / tau) ** (4.0 / 3.0), np.zeros_like(tau)
    if mode != "bulk":
        raise ConfigError(f"unknown Bjorken mode {mode!r}")
    eos = eos or EquationOfState("conformal")
    c = coeffs or BulkCoefficients()

    def rhs(t, y):
        rho, P = y
        p = float(eos.pressure(max(rho, 0.0), None))
        return [-(rho + p + P) / t, (-P - c.zeta / t - c.delta_PP * P / t) / c.tau_P]

    order = np.argsort(tau)
    ts = tau[order]
    sol = solve_ivp(rhs, (tau0, float(ts[-1])), [rho0, P0], method="DOP853", t_eval=ts,
                    rtol=rtol, atol=1e-14 * max(1.0, abs(rho0)))
    if not sol.success:
        raise ConfigError(f"Bjorken integration failed: {sol.message}")
    rho = np.empty_like(tau)
    P = np.empty_like(tau)
    rho[order], P[order] = sol.y[0], sol.y[1]
    return rho, P


def restrict(q: Array, factor: int = 2) -> Array:
    """Average groups of ``factor`` fine cells onto the coarse grid."""
    return q.reshape(-1, factor).mean(axis=1)


def self_convergence_order(coarse: Array, medium: Array, fine: Array) -> float:
    """Three-grid order log2(|q_N - q_2N|_1 / |q_2N - q_4N|_1) on the coarse grid."""
    e1 = np.mean(np.abs(coarse - restrict(medium)))
    e2 = np.mean(np.abs(restrict(medium) - restrict(fine, 4)))
    return float(np.log2(e1 / e2))
