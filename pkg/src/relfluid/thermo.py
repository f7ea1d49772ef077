"""Equations of state and thermodynamic scalars.

Units are geometric (c = 1). The primary thermodynamic pair is (rho, n) for the
ideal gas and rho alone for the barotropic kinds; every other scalar is derived.

Classes:
    EquationOfState: closed-form pressure with analytic partial derivatives
    ThermoState: a pointwise thermodynamic state with its derived scalars
    EnthalpyClosure: scalars and partials expressed in the (hhat, s) variables

Functions:
    sound_speed_sq: sound speed squared of a state
    derived_scalars: fill p, h, hhat, theta and cs2 from primary variables
    first_law_residual: discrete check of dp = n dh - n theta ds along a path
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import DivisionByZero, DomainError, InsufficientSamples, MissingTemperature

KINDS = ("conformal", "polytropic", "ideal-gas", "analytic")


@dataclass(frozen=True)
class EquationOfState:
    """Closed-form equation of state p = p(rho, n).

    Args:
        kind: one of ``conformal`` (p = rho/3), ``polytropic`` (p = rho**(kappa+1)),
            ``ideal-gas`` (p = (rho - n)(gamma - 1)) or ``analytic`` (caller supplied).
        kappa: polytropic exponent, strictly positive.
        gamma: adiabatic index of the ideal gas, larger than one.
        p_func, dp_drho_func, dp_dn_func: callables ``f(rho, n)`` for the analytic kind.
        theta_func: optional temperature closure ``theta(rho, n)`` for the analytic kind.
    """

    kind: str = "conformal"
    kappa: float = 1.0
    gamma: float = 5.0 / 3.0
    p_func: Optional[Callable[..., Any]] = field(default=None, compare=False)
    dp_drho_func: Optional[Callable[..., Any]] = field(default=None, compare=False)
    dp_dn_func: Optional[Callable[..., Any]] = field(default=None, compare=False)
    theta_func: Optional[Callable[..., Any]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown eos kind {self.kind!r}")
        if self.kind == "polytropic" and not self.kappa > 0:
            raise DomainError("polytropic eos needs kappa > 0")
        if self.kind == "ideal-gas" and not self.gamma > 1:
            raise DomainError("ideal-gas eos needs gamma > 1")
        if self.kind == "analytic":
            if self.p_func is None or self.dp_drho_func is None:
                raise DomainError("analytic eos needs p_func and dp_drho_func")
        # sampled monotonicity check on a representative slice of the domain
        rho = np.geomspace(1e-3, 1e2, 64)
        n = rho / 2 if self.kind == "ideal-gas" else rho
        if np.any(np.asarray(self.dp_drho(rho, n)) < 0):
            raise DomainError("eos has dp/drho < 0 on the sampled domain")

    @classmethod
    def from_config(cls, cfg: dict) -> "EquationOfState":
        """Build from a JSON-style dict such as ``{"kind": "polytropic", "kappa": 1.0}``."""
        kind = cfg.get("kind", "conformal")
        if kind == "analytic":
            raise DomainError("analytic eos cannot be built from a config file")
        return cls(kind=kind, kappa=float(cfg.get("kappa", 1.0)), gamma=float(cfg.get("gamma", 5.0 / 3.0)))

    def to_config(self) -> dict:
        if self.kind == "polytropic":
            return {"kind": self.kind, "kappa": self.kappa}
        if self.kind == "ideal-gas":
            return {"kind": self.kind, "gamma": self.gamma}
        return {"kind": self.kind}

    @property
    def barotropic(self) -> bool:
        """True when p depends on rho alone."""
        if self.kind == "analytic":
            return self.dp_dn_func is None
        return self.kind != "ideal-gas"

    def _check(self, rho, n=None):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < 0):
            raise DomainError("negative energy density")
        if self.kind == "ideal-gas":
            if n is None:
                raise DomainError("ideal-gas eos needs the baryon density n")
            n = np.asarray(n, dtype=float)
            if np.any(n < 0) or np.any(rho < n * (1 - 1e-14)):
                raise DomainError("ideal-gas eos needs 0 <= n <= rho")
        return rho, n

    def pressure(self, rho, n=None):
        rho, n = self._check(rho, n)
        if self.kind == "conformal":
            return rho / 3.0
        if self.kind == "polytropic":
            return rho ** (self.kappa + 1.0)
        if self.kind == "ideal-gas":
            return (rho - n) * (self.gamma - 1.0)
        return self.p_func(rho, n)

    def dp_drho(self, rho, n=None):
        """Partial of p with respect to rho at fixed n."""
        rho = np.asarray(rho, dtype=float)
        if self.kind == "conformal":
            return np.full_like(rho, 1.0 / 3.0)
        if self.kind == "polytropic":
            return (self.kappa + 1.0) * rho**self.kappa
        if self.kind == "ideal-gas":
            return np.full_like(rho, self.gamma - 1.0)
        return self.dp_drho_func(rho, n)

    def dp_dn(self, rho, n=None):
        """Partial of p with respect to n at fixed rho."""
        rho = np.asarray(rho, dtype=float)
        if self.kind == "ideal-gas":
            return np.full_like(rho, 1.0 - self.gamma)
        if self.kind == "analytic" and self.dp_dn_func is not None:
            return self.dp_dn_func(rho, n)
        return np.zeros_like(rho)

    def sound_speed_sq(self, rho, n=None, bulk=0.0):
        """Two-variable sound speed dp/drho|_n + n/(p + rho + bulk) dp/dn|_rho.

        ``bulk`` is the bulk viscous pressure; it only enters the denominator.
        """
        rho, n = self._check(rho, n)
        cs2 = self.dp_drho(rho, n)
        if not self.barotropic:
            enth = self.pressure(rho, n) + rho + bulk
            if np.any(enth <= 0):
                raise DomainError("p + rho must be positive")
            cs2 = cs2 + n / enth * self.dp_dn(rho, n)
        return cs2

    def temperature(self, rho, n=None):
        """theta(rho, n), or None when the eos has no temperature closure."""
        if self.kind == "ideal-gas":
            rho, n = self._check(rho, n)
            with np.errstate(divide="ignore", invalid="ignore"):
                return self.pressure(rho, n) / n
        if self.kind == "analytic" and self.theta_func is not None:
            return self.theta_func(rho, n)
        return None

    def entropy(self, rho, n=None):
        """Specific entropy of the ideal gas, normalized so that p = exp((gamma-1)s) n**gamma."""
        if self.kind != "ideal-gas":
            return None
        rho, n = self._check(rho, n)
        g = self.gamma
        return np.log(self.pressure(rho, n) / n**g) / (g - 1.0)

    def density_from_entropy(self, rho, s):
        """Invert rho = n + K n**gamma/(gamma-1) for n, with K = exp((gamma-1)s).

        Newton iteration started at n = rho, which brackets the root from above
        because the residual is convex and increasing in n.
        """
        if self.kind != "ideal-gas":
            raise DomainError("density_from_entropy is only defined for the ideal gas")
        rho = np.asarray(rho, dtype=float)
        g = self.gamma
        K = np.exp((g - 1.0) * np.asarray(s, dtype=float))
        n = rho.copy()
        for _ in range(200):
            f = n + K * n**g / (g - 1.0) - rho
            df = 1.0 + g * K * n ** (g - 1.0) / (g - 1.0)
            step = f / df
            n = n - step
            if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(n))):
                break
        return n

    def dp_ds(self, rho, n=None):
        """Partial of p with respect to s at fixed rho (ideal gas), zero for barotropic kinds."""
        rho = np.asarray(rho, dtype=float)
        if self.kind != "ideal-gas":
            return np.zeros_like(rho)
        p = self.pressure(rho, n)
        h = (p + rho) / n
        g = self.gamma
        return (g - 1.0) * p - g * (p / n) * (p / h)

    def enthalpy_closure(self, hhat, s=None, h_ref: float = 1.0) -> "EnthalpyClosure":
        """Thermodynamic scalars and partials as functions of (hhat, s)."""
        hhat = np.asarray(hhat, dtype=float)
        h = h_ref * np.exp(hhat)
        zero = np.zeros_like(h)
        if self.kind == "ideal-gas":
            if s is None:
                raise DomainError("ideal-gas closure needs the entropy s")
            g = self.gamma
            if np.any(h <= 1.0):
                raise DomainError("ideal-gas closure needs h > 1")
            K = np.exp((g - 1.0) * np.asarray(s, dtype=float))
            n = ((g - 1.0) / g * (h - 1.0) / K) ** (1.0 / (g - 1.0))
            p = K * n**g
            rho = h * n - p
            theta = (g - 1.0) * (h - 1.0) / g
            cs2 = (g - 1.0) * (h - 1.0) / h
            cs = np.sqrt(cs2)
            return EnthalpyClosure(
                h=h, n=n, rho=rho, p=p, theta=theta, cs2=cs2,
                dcs_dhhat=(g - 1.0) / (2.0 * cs * h), dcs_ds=zero,
                q=theta / h, dq_dhhat=(g - 1.0) / g / h, dq_ds=zero,
                dtheta_dhhat=(g - 1.0) * h / g,
            )
        if self.kind == "polytropic":
            k = self.kappa
            x = h ** (k / (k + 1.0)) - 1.0
            if np.any(x < 0):
                raise DomainError("polytropic closure needs h >= 1")
            rho = x ** (1.0 / k)
            p = rho ** (k + 1.0)
            n = (p + rho) / h
            cs2 = (k + 1.0) * x
            cs = np.sqrt(cs2)
            with np.errstate(divide="ignore", invalid="ignore"):
                dcs = k * h ** (k / (k + 1.0)) / (2.0 * cs)
            return EnthalpyClosure(h=h, n=n, rho=rho, p=p, theta=zero, cs2=cs2, dcs_dhhat=dcs,
                                   dcs_ds=zero, q=zero, dq_dhhat=zero, dq_ds=zero, dtheta_dhhat=zero)
        if self.kind == "conformal":
            # barotropic baryon density n = rho**(3/4), so h = (4/3) rho**(1/4)
            rho = (0.75 * h) ** 4
            p = rho / 3.0
            n = rho**0.75
            cs2 = np.full_like(h, 1.0 / 3.0)
            return EnthalpyClosure(h=h, n=n, rho=rho, p=p, theta=zero, cs2=cs2, dcs_dhhat=zero,
                                   dcs_ds=zero, q=zero, dq_dhhat=zero, dq_ds=zero, dtheta_dhhat=zero)
        raise MissingTemperature("analytic eos has no (hhat, s) closure")


@dataclass(frozen=True)
class EnthalpyClosure:
    """Scalars in the (hhat, s) variables with the partials used by the wave identity.

    For the barotropic kinds s is constant, so theta and q only ever multiply
    vanishing entropy gradients and are reported as zero.
    """

    h: np.ndarray
    n: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    theta: np.ndarray
    cs2: np.ndarray
    dcs_dhhat: np.ndarray
    dcs_ds: np.ndarray
    q: np.ndarray
    dq_dhhat: np.ndarray
    dq_ds: np.ndarray
    dtheta_dhhat: np.ndarray


@dataclass(frozen=True)
class ThermoState:
    """Pointwise thermodynamic state.

    ``flagged`` marks a sound speed squared outside [0, 1]; such states are
    representable so that acausal root placement can be demonstrated.
    """

    rho: float
    p: float
    cs2: float
    n: Optional[float] = None
    s: Optional[float] = None
    h: Optional[float] = None
    hhat: Optional[float] = None
    theta: Optional[float] = None
    dp_ds: float = 0.0
    h_ref: float = 1.0

    @property
    def flagged(self) -> bool:
        return not (0.0 <= self.cs2 <= 1.0)

    @property
    def dp_drho(self) -> float:
        """Partial of p with respect to rho at fixed entropy."""
        return self.cs2

    @classmethod
    def simple(cls, rho: float, p: float, cs2: float, **kw) -> "ThermoState":
        """State with explicitly supplied p and cs2 (no eos needed)."""
        return cls(rho=float(rho), p=float(p), cs2=float(cs2), **kw)


def sound_speed_sq(eos: EquationOfState, state: ThermoState) -> float:
    """Sound speed squared of ``state`` under ``eos``.

    Barotropic kinds use dp/drho; the ideal gas uses the two-variable form.
    Values outside [0, 1] are returned as they are; ``ThermoState.flagged``
    reports them.
    """
    return float(eos.sound_speed_sq(state.rho, state.n))


def derived_scalars(eos: EquationOfState, rho: float, n: Optional[float] = None,
                    s: Optional[float] = None, h_ref: float = 1.0,
                    need_enthalpy: bool = False) -> ThermoState:
    """Fill p, h, hhat, theta and cs2 from the primary variables.

    Args:
        eos: equation of state.
        rho: energy density, nonnegative.
        n: baryon density; for the ideal gas either ``n`` or ``s`` must be given.
        s: specific entropy (ideal gas only), used when ``n`` is omitted.
        h_ref: reference enthalpy of hhat = log(h/h_ref).
        need_enthalpy: raise DivisionByZero when n = 0 instead of leaving h empty.
    """
    if rho < 0:
        raise DomainError("negative energy density")
    if eos.kind == "ideal-gas":
        if n is None:
            if s is None:
                raise DomainError("ideal gas needs n or s")
            n = float(eos.density_from_entropy(rho, s))
        elif s is None and n > 0:
            s = float(eos.entropy(rho, n))
    elif n is None and eos.kind == "polytropic":
        n = float(rho / (1.0 + rho**eos.kappa) ** (1.0 / eos.kappa))
    elif n is None and eos.kind == "conformal":
        n = float(rho**0.75)
    p = float(eos.pressure(rho, n))
    h = hhat = theta = None
    if n is not None and n > 0:
        h = (p + rho) / n
        hhat = float(np.log(h / h_ref))
        t = eos.temperature(rho, n)
        theta = None if t is None else float(t)
    elif need_enthalpy:
        raise DivisionByZero("h = (p + rho)/n needs n > 0")
    cs2 = float(eos.sound_speed_sq(rho, n))
    dps = float(eos.dp_ds(rho, n)) if eos.kind == "ideal-gas" and n else 0.0
    return ThermoState(rho=float(rho), p=p, cs2=cs2, n=n, s=s, h=h, hhat=hhat, theta=theta,
                       dp_ds=dps, h_ref=h_ref)


def first_law_residual(eos: EquationOfState, path: Sequence[ThermoState], delta: float) -> float:
    """Max over a sampled path of |dp - n dh + n theta ds| / delta.

    One-sided first differences are used, so the residual is O(delta) for an
    eos that satisfies the first law. Barotropic states without entropy are
    treated as isentropic.
    """
    if len(path) < 3:
        raise InsufficientSamples("first_law_residual needs at least 3 samples")
    worst = 0.0
    for a, b in zip(path[:-1], path[1:]):
        if a.n is None or a.h is None or b.h is None:
            raise DivisionByZero("first law residual needs n > 0 along the path")
        ds = 0.0
        if a.s is not None and b.s is not None:
            ds = b.s - a.s
        if ds != 0.0 and a.theta is None:
            raise MissingTemperature("non-isentropic path needs theta")
        theta = a.theta or 0.0
        r = abs((b.p - a.p) - a.n * (b.h - a.h) + a.n * theta * ds) / delta
        worst = max(worst, r)
    return worst
