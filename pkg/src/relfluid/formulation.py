"""Grid checks of the vorticity and entropy identities and of the wave equation for hhat.

Fields live on (t, x, y, z) grids in Minkowski rectangular coordinates with
epsilon^{0123} = 1. Derivatives are centered differences; residuals are
reported on interior time levels only because the time axis of a simulation
sample is not periodic.

Classes:
    EulerSample: (hhat, s, u) on a grid together with the thermodynamic closure
    VorticityPack: Omega, omega, S, C and D

Functions:
    sample_from_field, sample_from_sim, vorticity_two_form, lichnerowicz_residual,
    vorticity_evolution_residual, auxiliary_pack, null_form, wave_operator,
    hhat_wave_residual, richardson_order
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt

from .errors import DegenerateSoundSpeed, DivisionByZero, MissingTemperature, SchemaError
from .grid import GridField, GridField4, embed_1d
from .sim1d import _barotropic_n
from .thermo import EnthalpyClosure, EquationOfState

Array = npt.NDArray[np.float64]

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])


def _levi_civita() -> Array:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        sign = np.linalg.det(np.eye(4)[list(perm)])
        eps[perm] = round(sign)
    return eps


EPS = _levi_civita()  # contravariant, EPS[0, 1, 2, 3] = 1


@dataclass
class EulerSample:
    """Sampled (hhat, s, u) with the closure evaluated pointwise."""

    grid: GridField4
    hhat: Array
    s: Array
    u: Array
    closure: EnthalpyClosure
    order: int = 2

    @property
    def u_low(self) -> Array:
        return np.einsum("ab,b...->a...", ETA, self.u)

    @property
    def h(self) -> Array:
        return self.closure.h

    def d(self, a: Array, mu: int) -> Array:
        return self.grid.diff(a, mu, self.order)

    def grad(self, a: Array) -> Array:
        """Leading axis is the derivative index."""
        return np.stack([self.d(a, mu) for mu in range(4)])

    def interior(self, depth: int = 1) -> tuple:
        """Slice that drops ``depth`` levels at each end of non-periodic axes."""
        sl = []
        for n, per in zip(self.grid.dims, self.grid.periodic):
            sl.append(slice(None) if per else slice(depth, n - depth))
        return (Ellipsis,) + tuple(sl)


def sample_from_field(field: GridField4, eos: EquationOfState, h_ref: float = 1.0, order: int = 2) -> EulerSample:
    """Wrap a GridField4 holding ``hhat``, ``u`` and optionally ``s``."""
    if "hhat" not in field or "u" not in field:
        raise SchemaError("field needs variables hhat and u")
    hhat = field["hhat"]
    s = field["s"] if "s" in field else np.zeros_like(hhat)
    closure = eos.enthalpy_closure(hhat, s if eos.kind == "ideal-gas" else None, h_ref)
    return EulerSample(field, hhat, s, field["u"], closure, order)


def sample_from_sim(field2d: GridField, eos: EquationOfState, h_ref: float = 1.0,
                    n_transverse: int = 5, order: int = 2) -> EulerSample:
    """Embed a (t, x) solver output (rho, n, v) in 4D and convert it to (hhat, s, u)."""
    times = field2d.meta.get("times")
    if times is not None and len(times) == field2d.dims[0] and len(times) > 1:
        gaps = np.diff(np.asarray(times, dtype=float))
        if np.max(np.abs(gaps - field2d.spacing[0])) > 1e-9 * max(field2d.spacing[0], 1e-300):
            raise SchemaError("time levels are not uniformly spaced; use an output interval dividing the step count")
    rho, n = field2d["rho"], field2d["n"]
    if eos.kind == "ideal-gas":
        s = eos.entropy(rho, n)
        h = (eos.pressure(rho, n) + rho) / n
    else:
        s = np.zeros_like(rho)
        h = (eos.pressure(rho) + rho) / _barotropic_n(eos, rho)
    f2 = GridField(field2d.dims, field2d.spacing, {"hhat": np.log(h / h_ref), "s": s, "v": field2d["v"]},
                   field2d.periodic, dict(field2d.meta))
    return sample_from_field(embed_1d(f2, n_transverse), eos, h_ref, order)


def vorticity_two_form(sample: EulerSample) -> Array:
    """Omega_{ab} = d_a(h u_b) - d_b(h u_a), built from its 6 independent components."""
    w = sample.h * sample.u_low
    dw = np.stack([sample.d(w, mu) for mu in range(4)])  # dw[a, b] = d_a w_b
    om = np.zeros_like(dw)
    for a in range(4):
        for b in range(a + 1, 4):
            om[a, b] = dw[a, b] - dw[b, a]
            om[b, a] = -om[a, b]
    return om


def _require_theta(sample: EulerSample) -> None:
    if sample.closure.theta is None:
        raise MissingTemperature("temperature closure unavailable")


def lichnerowicz_residual(sample: EulerSample) -> tuple[Array, float]:
    """u^a Omega_{ab} - theta d_b s; returns the field and its interior max-norm."""
    _require_theta(sample)
    om = vorticity_two_form(sample)
    res = np.einsum("a...,ab...->b...", sample.u, om) - sample.closure.theta * sample.grad(sample.s)
    return res, float(np.max(np.abs(res[(slice(None),) + sample.interior(1)[1:]])))


def vorticity_evolution_residual(sample: EulerSample) -> tuple[Array, float]:
    """w^m d_m Omega_ab + d_a w^m Omega_mb + d_b w^m Omega_am - [d_a(h theta) d_b s - d_b(h theta) d_a s]."""
    _require_theta(sample)
    om = vorticity_two_form(sample)
    w = sample.h * sample.u
    dom = np.stack([sample.d(om, mu) for mu in range(4)])  # dom[m, a, b]
    dw = np.stack([sample.d(w, mu) for mu in range(4)])  # dw[a, m] = d_a w^m
    ht = sample.h * sample.closure.theta
    dht = sample.grad(ht)
    ds = sample.grad(sample.s)
    lhs = (np.einsum("m...,mab...->ab...", w, dom) + np.einsum("am...,mb...->ab...", dw, om)
           + np.einsum("bm...,am...->ab...", dw, om))
    rhs = np.einsum("a...,b...->ab...", dht, ds) - np.einsum("b...,a...->ab...", dht, ds)
    res = lhs - rhs
    return res, float(np.max(np.abs(res[(slice(None), slice(None)) + sample.interior(2)[1:]])))


def vort(sample: EulerSample, V_low: Array) -> Array:
    """vort^a(V) = -eps^{abcd} u_b d_c V_d for a covariant V."""
    dV = np.stack([sample.d(V_low, mu) for mu in range(4)])  # dV[c, d]
    return -np.einsum("abcd,b...,cd...->a...", EPS, sample.u_low, dV)


@dataclass
class VorticityPack:
    Omega: Array
    omega: Array
    S: Array
    C: Array
    D: Array


def auxiliary_pack(sample: EulerSample) -> VorticityPack:
    """Omega, omega = vort(h u), S = ds, and the modified quantities C and D.

    C^a = vort^a(omega) + cs^-2 eps^{abcd} u_b d_c hhat omega_d
          + (theta - dtheta/dhhat) [S^a d_l u^l + u^a S^l d_l hhat + S^l g^{ab} d_l u_b]
    D = (1/n) d_l S^l + (1/n) S^l d_l hhat - (1/n) cs^-2 S^l d_l hhat
    """
    _require_theta(sample)
    cl = sample.closure
    if np.any(cl.n <= 0):
        raise DivisionByZero("D needs n > 0")
    u, ul = sample.u, sample.u_low
    Om = vorticity_two_form(sample)
    omega = vort(sample, sample.h * ul)
    omega_low = np.einsum("ab,b...->a...", ETA, omega)
    S = sample.grad(sample.s)
    S_up = np.einsum("ab,b...->a...", ETA, S)
    dh = sample.grad(sample.hhat)
    du = np.stack([sample.d(u, mu) for mu in range(4)])  # du[l, a] = d_l u^a
    div_u = np.einsum("ll...->...", du)
    Sdh = np.einsum("l...,l...->...", S_up, dh)
    coef = cl.theta - cl.dtheta_dhhat
    C = (vort(sample, omega_low)
         + np.einsum("abcd,b...,c...,d...->a...", EPS, ul, dh, omega_low) / cl.cs2
         + coef * (S_up * div_u + u * Sdh + np.einsum("l...,la...->a...", S_up, du)))
    dS = sum(sample.d(S_up[l], l) for l in range(4))
    D = (dS + Sdh - Sdh / cl.cs2) / cl.n
    return VorticityPack(Om, omega, S, C, D)


def null_form(Ginv: Optional[Array], dphi, dpsi, kind: str = "symmetric"):
    """Q^G = Ginv^{ab} dphi_a dpsi_b, or the antisymmetric Q_ab = dphi_a dpsi_b - dphi_b dpsi_a."""
    dphi = np.asarray(dphi, dtype=float)
    dpsi = np.asarray(dpsi, dtype=float)
    if kind == "symmetric":
        G = np.asarray(Ginv, dtype=float)
        Gs = 0.5 * (G + G.T)
        # averaging both orders makes the result bitwise symmetric in (phi, psi)
        return 0.5 * (float(dphi @ Gs @ dpsi) + float(dpsi @ Gs @ dphi))
    if kind == "antisymmetric":
        return np.outer(dphi, dpsi) - np.outer(dpsi, dphi)
    raise ValueError(f"unknown null form kind {kind!r}")


def _ginv_field(u: Array, cs2: Array) -> Array:
    return cs2 * ETA[(...,) + (None,) * (u.ndim - 1)] + (cs2 - 1.0) * np.einsum("a...,b...->ab...", u, u)


def wave_operator(sample: EulerSample, f: Array, cs2: Optional[Array] = None) -> tuple[Array, Array]:
    """Box_G f in divergence form and in expanded form.

    Divergence form: cs^3 d_a( [cs^-1 g^ab + (cs^-1 - cs^-3) u^a u^b] d_b f ), using
    |det G|^(1/2) = cs^-3. Expanded form: Ginv^ab d_a d_b f + cs^3 d_a(cs^-3 Ginv^ab) d_b f,
    with three-point second differences on the diagonal. Returns (divergence, expanded).
    """
    cs2 = sample.closure.cs2 if cs2 is None else cs2
    if np.any(cs2 <= 0):
        raise DegenerateSoundSpeed("wave operator needs cs2 > 0")
    cs = np.sqrt(cs2)
    u = sample.u
    coef = (ETA[(...,) + (None,) * (u.ndim - 1)] / cs
            + (1.0 / cs - 1.0 / cs**3) * np.einsum("a...,b...->ab...", u, u))
    df = sample.grad(f)
    flux = np.einsum("ab...,b...->a...", coef, df)
    div = cs**3 * sum(sample.d(flux[a], a) for a in range(4))
    Gi = _ginv_field(u, cs2)
    second = np.zeros_like(f)
    for a in range(4):
        for b in range(4):
            if a == b:
                dab = _second_diff(sample.grid, f, a)
            else:
                dab = sample.d(df[b], a)
            second = second + Gi[a, b] * dab
    dcoef = sum(np.einsum("b...,b...->...", sample.grad(coef[a])[a], df) for a in range(4))
    expanded = second + cs**3 * dcoef
    return div, expanded


def _second_diff(grid: GridField, f: Array, mu: int) -> Array:
    h = grid.spacing[mu]
    axis = f.ndim - 4 + mu
    if grid.dims[mu] == 1:
        return np.zeros_like(f)
    if grid.periodic[mu]:
        return (np.roll(f, -1, axis) - 2.0 * f + np.roll(f, 1, axis)) / (h * h)
    out = np.empty_like(f)
    sl = lambda a, b: tuple(slice(a, b) if k == axis else slice(None) for k in range(f.ndim))
    out[sl(1, -1)] = (f[sl(2, None)] - 2.0 * f[sl(1, -1)] + f[sl(None, -2)]) / (h * h)
    out[sl(0, 1)] = out[sl(1, 2)]
    out[sl(-1, None)] = out[sl(-2, -1)]
    return out


def hhat_wave_rhs(sample: EulerSample, pack: Optional[VorticityPack] = None) -> Array:
    """Right-hand side of the wave equation for hhat (the derived identity).

    n cs^2 q D + (1 - cs^2) q S^b d_b hhat - (dcs/dhhat) cs^-1 Ginv^ab d_a hhat d_b hhat
    + cs^2 (d_a u^a d_b u^b - d_b u^a d_a u^b) - cs (dcs/ds) S^a d_a hhat
    + cs^2 (dq/dhhat) S^b d_b hhat + cs^2 (dq/ds) S^b S_b
    """
    cl = sample.closure
    pack = pack or auxiliary_pack(sample)
    cs2 = cl.cs2
    cs = np.sqrt(cs2)
    dh = sample.grad(sample.hhat)
    S = pack.S
    S_up = np.einsum("ab,b...->a...", ETA, S)
    Sdh = np.einsum("a...,a...->...", S_up, dh)
    Gi = _ginv_field(sample.u, cs2)
    Q = np.einsum("ab...,a...,b...->...", Gi, dh, dh)
    du = np.stack([sample.d(sample.u, mu) for mu in range(4)])  # du[b, a] = d_b u^a
    div = np.einsum("ll...->...", du)
    quad = div * div - np.einsum("ba...,ab...->...", du, du)
    SS = np.einsum("a...,a...->...", S_up, S)
    return (cl.n * cs2 * cl.q * pack.D + (1.0 - cs2) * cl.q * Sdh - cl.dcs_dhhat / cs * Q
            + cs2 * quad - cs * cl.dcs_ds * Sdh + cs2 * cl.dq_dhhat * Sdh + cs2 * cl.dq_ds * SS)


def hhat_wave_residual(sample: EulerSample) -> tuple[Array, float]:
    """Box_G hhat - RHS on the grid; max-norm over levels where every stencil is centered."""
    _require_theta(sample)
    box, _ = wave_operator(sample, sample.hhat)
    res = box - hhat_wave_rhs(sample)
    return res, float(np.max(np.abs(res[sample.interior(2)])))


CHECKS = {
    "lichnerowicz": lichnerowicz_residual,
    "vort-evo": vorticity_evolution_residual,
    "hhat-wave": hhat_wave_residual,
}


def richardson_order(errors, refinement: float = 2.0) -> dict:
    """Pairwise orders log(e_k/e_{k+1})/log(r) and the least-squares slope over all grids."""
    e = np.asarray(errors, dtype=float)
    pair = [float(np.log(e[k] / e[k + 1]) / np.log(refinement)) for k in range(len(e) - 1)]
    h = refinement ** -np.arange(len(e), dtype=float)
    slope = float(np.polyfit(np.log(h), np.log(e), 1)[0])
    return {"pairwise": pair, "slope": slope, "min": min(pair + [slope])}
