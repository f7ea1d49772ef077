"""Causality conditions for the DNMR and BDNK viscous theories.

Every condition is evaluated as ``margin = LHS - RHS`` of its displayed
inequality together with the relation (``ge``, ``gt``, ``le``, ``lt``). A
``ge``/``gt`` condition passes when the margin is nonnegative (positive), a
``le``/``lt`` condition when it is nonpositive (negative). In the default mode
every relation is read as its closure (strict ``>`` becomes ``>=``); ``strict``
mode reads every relation as strict.

Evaluators are vectorized over numpy arrays so large audits run in bulk.

Classes:
    ShearTensor, ShearSpectrum, DNMRCoefficients, BDNKCoefficients, DNMRState,
    ConditionSet, CellResult, CausalityReport

Functions:
    shear_spectrum, dnmr_sufficient, dnmr_necessary, dnmr_verdict, bdnk_causal,
    beta_rho_from_eos, batch_audit
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np
import numpy.typing as npt

from .errors import ConsistencyError, ConstraintViolation, InternalError, PreconditionFailed, SchemaError
from .kinematics import MINKOWSKI, Metric4

Array = npt.NDArray[np.float64]

CAUSAL, ACAUSAL, INDETERMINATE, INVALID = "Causal", "Acausal", "Indeterminate", "invalid"
PI_KEYS = ("pi_00", "pi_01", "pi_02", "pi_03", "pi_11", "pi_12", "pi_13", "pi_22", "pi_23", "pi_33")
_PAIRS = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))


# --------------------------------------------------------------------------- shear


@dataclass(frozen=True)
class ShearTensor:
    """Contravariant shear stress pi^{mn} stored through its 10 independent components."""

    components: tuple[float, ...]
    u: Array
    metric: Metric4 = MINKOWSKI

    def __post_init__(self) -> None:
        if len(self.components) != 10:
            raise SchemaError("shear tensor needs 10 components")
        object.__setattr__(self, "components", tuple(float(c) for c in self.components))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))

    @classmethod
    def from_matrix(cls, pi: Array, u, metric: Metric4 = MINKOWSKI) -> "ShearTensor":
        pi = np.asarray(pi, dtype=float)
        return cls(tuple(pi[a, b] for a, b in _PAIRS), u, metric)

    @property
    def matrix(self) -> Array:
        pi = np.zeros((4, 4))
        for c, (a, b) in zip(self.components, _PAIRS):
            pi[a, b] = pi[b, a] = c
        return pi

    def constraint_residuals(self) -> dict[str, float]:
        """Orthogonality u^m pi_{ma}, trace pi^m_m and normalization of u."""
        g = self.metric.g
        pi = self.matrix
        ortho = self.u @ g @ pi @ g
        return {
            "orthogonality": float(np.max(np.abs(ortho))),
            "trace": float(abs(np.sum(g * pi))),
            "normalization": float(abs(self.metric.dot(self.u, self.u) + 1.0)),
        }

    def projected(self) -> "ShearTensor":
        """Symmetric, traceless, u-orthogonal projection of pi."""
        g = self.metric.g
        P = self.metric.ginv + np.outer(self.u, self.u)  # Pi^{ab}
        Pm = P @ g  # Pi^a_b
        pt = Pm @ self.matrix @ Pm.T
        pt = 0.5 * (pt + pt.T)
        pt -= np.sum(g * pt) / 3.0 * P
        return ShearTensor.from_matrix(pt, self.u, self.metric)


@dataclass(frozen=True)
class ShearSpectrum:
    """Sorted eigenvalues of pi on the u-orthogonal space and the orthonormal frame (e_0 = u)."""

    Lambda: tuple[float, float, float]
    frame: Array
    residual: float = 0.0


def _spatial_frame(u: Array, metric: Metric4) -> Array:
    """Orthonormal frame with e_0 = u, built by Gram-Schmidt in g from the coordinate axes."""
    g = metric.g
    basis = [u]
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        for b in basis:
            e = e - (e @ g @ b) / (b @ g @ b) * b
        nrm = e @ g @ e
        if nrm > 1e-10:
            basis.append(e / math.sqrt(nrm))
        if len(basis) == 4:
            break
    return np.array(basis)


def shear_spectrum(pi: ShearTensor, tol_constraint: float = 1e-8) -> ShearSpectrum:
    """Eigen-decompose pi^m_n on the space orthogonal to u.

    Raises:
        ConstraintViolation: orthogonality, trace or normalization residual above tolerance.
        InternalError: the reconstruction sum Lambda_A e_A e_A does not reproduce pi.
    """
    res = pi.constraint_residuals()
    scale = max(1.0, float(np.max(np.abs(pi.matrix))))
    worst = max(res, key=res.get)
    if res[worst] > tol_constraint * scale:
        raise ConstraintViolation(f"{worst} residual {res[worst]:.3e} exceeds {tol_constraint:g}")
    g = pi.metric.g
    E = _spatial_frame(pi.u, pi.metric)
    spatial = E[1:]
    M = spatial @ g @ pi.matrix @ g @ spatial.T  # components in the orthonormal spatial frame
    M = 0.5 * (M + M.T)
    lam, vec = np.linalg.eigh(M)
    frame = np.vstack([pi.u, vec.T @ spatial])
    recon = sum(lam[a] * np.outer(frame[a + 1], frame[a + 1]) for a in range(3))
    residual = float(np.max(np.abs(recon - pi.matrix)))
    if residual > max(1e-10, 10 * tol_constraint) * scale:
        raise InternalError(f"shear reconstruction residual {residual:.3e}")
    return ShearSpectrum((float(lam[0]), float(lam[1]), float(lam[2])), frame, residual)


# ---------------------------------------------------------------- coefficient records


@dataclass(frozen=True)
class DNMRCoefficients:
    """Transport coefficients of the DNMR theory restricted to (P, pi), plus cs^2."""

    tau_P: float = 1.0
    tau_pi: float = 1.0
    zeta: float = 0.0
    eta: float = 0.0
    delta_PP: float = 0.0
    lambda_Ppi: float = 0.0
    delta_pipi: float = 0.0
    tau_pipi: float = 0.0
    lambda_piP: float = 0.0
    delta_Ppi: float = 0.0
    cs2: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        bad = [f.name for f in fields(self) if f.name not in ("tau_P", "tau_pi", "cs2") and getattr(self, f.name) < 0]
        if not (self.tau_P > 0 and self.tau_pi > 0):
            bad.append("tau_P, tau_pi > 0")
        if bad:
            raise PreconditionFailed(f"(A.1) violated: {', '.join(bad)}")

    @classmethod
    def from_mapping(cls, m: Mapping) -> "DNMRCoefficients":
        names = {f.name for f in fields(cls)}
        return cls(**{k: float(v) for k, v in m.items() if k in names})


@dataclass(frozen=True)
class BDNKCoefficients:
    """Transport coefficients of the BDNK theory; beta_rho is an explicit input."""

    p_plus_rho: float
    cs2: float
    tau_R: float
    tau_P: float
    tau_Q: float
    eta: float = 0.0
    zeta: float = 0.0
    kappa_kappa: float = 0.0
    beta_rho: float = 0.0

    def __post_init__(self) -> None:
        bad = [k for k in ("p_plus_rho", "tau_R", "tau_P", "tau_Q") if not getattr(self, k) > 0]
        bad += [k for k in ("eta", "zeta", "kappa_kappa") if getattr(self, k) < 0]
        if bad:
            raise PreconditionFailed(f"(A.1) violated: {', '.join(bad)}")

    @classmethod
    def from_mapping(cls, m: Mapping) -> "BDNKCoefficients":
        names = {f.name for f in fields(cls)}
        return cls(**{k: float(v) for k, v in m.items() if k in names})


def beta_rho_from_eos(tau_Q: float, dp_drho_n: float, kappa: float, theta: float, h: float,
                      dmu_theta_drho_n: float) -> float:
    """beta_rho = tau_Q dp/drho|_n + kappa theta h d(mu/theta)/drho|_n.

    The partial of mu/theta must come from a chemical-potential closure the caller owns.
    """
    return tau_Q * dp_drho_n + kappa * theta * h * dmu_theta_drho_n


@dataclass(frozen=True)
class DNMRState:
    """Pointwise input to the DNMR conditions."""

    rho: float
    p: float
    P_bulk: float
    Lambda: tuple[float, float, float]

    def check(self) -> None:
        """Hypotheses (A.2) and (A.3)."""
        R = self.rho + self.p + self.P_bulk
        failed = []
        if not self.rho > 0:
            failed.append("rho > 0")
        if not self.p >= 0:
            failed.append("p >= 0")
        if not R > 0:
            failed.append("rho + p + P > 0")
        for i, lam in enumerate(self.Lambda, 1):
            if not R + lam > 0:
                failed.append(f"rho + p + P + Lambda_{i} > 0")
        if failed:
            raise PreconditionFailed("hypotheses violated: " + "; ".join(failed))


# ------------------------------------------------------------------- condition sets


@dataclass
class ConditionSet:
    """Margins (LHS - RHS) and relations of a family of inequalities."""

    margins: dict[str, Array]
    relations: dict[str, str]
    forced_fail: dict[str, Array] = field(default_factory=dict)

    def passes(self, strict: bool = False) -> dict[str, Array]:
        out = {}
        for k, m in self.margins.items():
            rel = self.relations[k]
            m = np.asarray(m)
            if rel in ("ge", "gt"):
                ok = m > 0 if strict else m >= 0
            else:
                ok = m < 0 if strict else m <= 0
            if k in self.forced_fail:
                ok = ok & ~self.forced_fail[k]
            out[k] = ok
        return out

    def all_pass(self, strict: bool = False) -> Array:
        ps = self.passes(strict)
        return np.logical_and.reduce(list(ps.values())) if ps else np.asarray(True)

    def failed(self, strict: bool = False) -> list[str]:
        """Names of failed conditions (scalar sets only)."""
        return [k for k, ok in self.passes(strict).items() if not bool(ok)]

    def scalar_margins(self) -> dict[str, Optional[float]]:
        out = {}
        for k, m in self.margins.items():
            v = float(m)
            out[k] = v if math.isfinite(v) else None
        return out


def _arr(x) -> Array:
    return np.asarray(x, dtype=float)


def _frac(num: Array, den: Array) -> tuple[Array, Array]:
    """num/den with 0/0 := 0; returns (value, nonzero-over-zero mask)."""
    num, den = np.broadcast_arrays(_arr(num), _arr(den))
    zero = den == 0
    bad = zero & (num != 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(zero, 0.0, num / np.where(zero, 1.0, den))
    return val, bad


def _common(rho, p, P, lam, c):
    R = _arr(rho) + _arr(p) + _arr(P)
    L1, L2, L3 = (_arr(x) for x in lam)
    A0 = 2.0 * _arr(c["eta"]) + _arr(c["lambda_piP"]) * _arr(P)
    return R, L1, L2, L3, np.abs(L1), A0


def _coef_dict(coeffs) -> dict:
    if isinstance(coeffs, DNMRCoefficients):
        return {f.name: getattr(coeffs, f.name) for f in fields(coeffs)}
    return dict(coeffs)


def dnmr_sufficient_margins(rho, p, P, lam, coeffs) -> ConditionSet:
    """Sufficient conditions (a)-(h), vectorized over the inputs.

    (h) is omitted where tau_pipi = delta_pipi = 0; for array input it is kept
    but set to a passing margin at those entries.
    """
    c = _coef_dict(coeffs)
    R, L1, L2, L3, aL1, A0 = _common(rho, p, P, lam, c)
    tp, tP = _arr(c["tau_pi"]), _arr(c["tau_P"])
    tpp, dpp = _arr(c["tau_pipi"]), _arr(c["delta_pipi"])
    zeta, eta, dPP = _arr(c["zeta"]), _arr(c["eta"]), _arr(c["delta_PP"])
    lPp, lpP, dPp = _arr(c["lambda_Ppi"]), _arr(c["lambda_piP"]), _arr(c["delta_Ppi"])
    cs2 = _arr(c["cs2"])

    a = R - aL1 - A0 / (2.0 * tp) - tpp / (2.0 * tp) * L3
    b = A0 - tpp * aL1
    cc = tpp - 6.0 * dpp
    d = lPp / tP + cs2 - tpp / (12.0 * tp)
    num = (12.0 * dpp - tpp) / (12.0 * tp) * d * (L3 + aL1) ** 2
    frac_e, bad_e = _frac(num, a)
    e = ((4.0 * eta + 2.0 * lpP * P + (3.0 * dpp + tpp) * L3) / (3.0 * tp)
         + (zeta + dPP * P + lPp * L3) / tP + aL1 + L3 * cs2 + frac_e - R * (1.0 - cs2))
    f = ((A0 + (tpp - 6.0 * dpp) * aL1) / (6.0 * tp) + (zeta + dPP * P - dPp * aL1) / tP + (R - aL1) * cs2)
    den_g = (A0 / (2.0 * tp) - tpp / (2.0 * tp) * aL1) ** 2
    frac_g, bad_g = _frac(num, den_g)
    g = frac_g - 1.0
    margins = {"a": a, "b": b, "c": cc, "d": d, "e": e, "f": f, "g": g}
    relations = {"a": "ge", "b": "gt", "c": "le", "d": "ge", "e": "le", "f": "ge", "g": "le"}
    forced = {"e": bad_e, "g": bad_g}
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs_h = (R + L2) * (R + L3) / (3.0 * (R - aL1)) * (1.0 + (A0 / tp + tpp / tp * L3) / (R - aL1))
    rhs_h = ((4.0 * eta + 2.0 * lpP * P - (3.0 * dpp + tpp) * aL1) / (3.0 * tp)
             + (zeta + dPP * P - dPp * aL1) / tP + (R - aL1) * cs2)
    active_h = (tpp != 0) | (dpp != 0)
    if np.any(active_h):
        margins["h"] = np.where(active_h, lhs_h - rhs_h, -np.inf)
        relations["h"] = "le"
    for k in margins:
        margins[k] = np.broadcast_to(margins[k], np.broadcast(R, L3).shape).copy()
    return ConditionSet(margins, relations, forced)


def dnmr_necessary_margins(rho, p, P, lam, coeffs) -> ConditionSet:
    """Necessary conditions (a)-(f); (c), (d) over i != j and (e), (f) over i."""
    c = _coef_dict(coeffs)
    R, L1, L2, L3, aL1, A0 = _common(rho, p, P, lam, c)
    L = (L1, L2, L3)
    tp, tP = _arr(c["tau_pi"]), _arr(c["tau_P"])
    tpp, dpp = _arr(c["tau_pipi"]), _arr(c["delta_pipi"])
    zeta, dPP, lPp = _arr(c["zeta"]), _arr(c["delta_PP"]), _arr(c["lambda_Ppi"])
    cs2 = _arr(c["cs2"])
    half = A0 / (2.0 * tp)
    m = {"a": A0 - 0.5 * tpp * aL1, "b": R - half - tpp / (4.0 * tp) * L3}
    for i in range(3):
        for j in range(3):
            if i != j:
                s = L[i] + L[j]
                m[f"c_{i + 1}{j + 1}"] = half + tpp / (4.0 * tp) * s
                m[f"d_{i + 1}{j + 1}"] = R + L[i] - half - tpp / (4.0 * tp) * s
    for i in range(3):
        li = L[i]
        core = (half + tpp / (2.0 * tp) * li + (A0 + (6.0 * dpp - tpp) * li) / (6.0 * tp)
                + (zeta + dPP * P + lPp * li) / tP)
        m[f"e_{i + 1}"] = core + (R + li) * cs2
        m[f"f_{i + 1}"] = R + li - core - (R + li) * cs2
    shape = np.broadcast(R, L3).shape
    m = {k: np.broadcast_to(v, shape).copy() for k, v in m.items()}
    return ConditionSet(m, {k: "ge" for k in m})


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    margins: dict[str, Optional[float]]
    relations: dict[str, str]
    failed: list[str]


def _scalar_result(cs: ConditionSet, strict: bool) -> ConditionResult:
    failed = cs.failed(strict)
    return ConditionResult(not failed, cs.scalar_margins(), dict(cs.relations), failed)


def dnmr_sufficient(state: DNMRState, coeffs: DNMRCoefficients, strict: bool = False) -> ConditionResult:
    """Sufficient conditions (a)-(h) on one state."""
    state.check()
    return _scalar_result(dnmr_sufficient_margins(state.rho, state.p, state.P_bulk, state.Lambda, coeffs), strict)


def dnmr_necessary(state: DNMRState, coeffs: DNMRCoefficients, strict: bool = False) -> ConditionResult:
    """Necessary conditions (a)-(f) on one state."""
    state.check()
    return _scalar_result(dnmr_necessary_margins(state.rho, state.p, state.P_bulk, state.Lambda, coeffs), strict)


@dataclass(frozen=True)
class Verdict:
    verdict: str
    sufficient: ConditionResult
    necessary: ConditionResult

    @property
    def margins(self) -> dict[str, Optional[float]]:
        out = {f"suff_{k}": v for k, v in self.sufficient.margins.items()}
        out.update({f"nec_{k}": v for k, v in self.necessary.margins.items()})
        return out

    @property
    def relations(self) -> dict[str, str]:
        out = {f"suff_{k}": v for k, v in self.sufficient.relations.items()}
        out.update({f"nec_{k}": v for k, v in self.necessary.relations.items()})
        return out


def dnmr_verdict(state: DNMRState, coeffs: DNMRCoefficients, strict: bool = False) -> Verdict:
    """Causal if the sufficient set passes, Acausal if the necessary set fails, else Indeterminate."""
    suff = dnmr_sufficient(state, coeffs, strict)
    nec = dnmr_necessary(state, coeffs, strict)
    if suff.passed and not nec.passed:
        raise ConsistencyError(f"sufficient conditions pass but necessary fail at {nec.failed}")
    if suff.passed:
        return Verdict(CAUSAL, suff, nec)
    if not nec.passed:
        return Verdict(ACAUSAL, suff, nec)
    return Verdict(INDETERMINATE, suff, nec)


def bdnk_margins(c: BDNKCoefficients | Mapping) -> ConditionSet:
    """Conditions (a)-(d), with the chained (b) and (c) split into two margins each.

    (d) is rearranged so that the terms (p + rho) tau_R tau_Q cs^2 cancel exactly:
    margin = kappa_kappa tau_P - tau_R (zeta + 4 eta/3 + kappa_kappa) - beta_rho (zeta + 4 eta/3).
    """
    if not isinstance(c, BDNKCoefficients):
        c = BDNKCoefficients.from_mapping(c)
    w, cs2 = c.p_plus_rho, c.cs2
    tR, tP, tQ = c.tau_R, c.tau_P, c.tau_Q
    visc = c.zeta + 4.0 / 3.0 * c.eta
    X = tR * (w * cs2 * tQ + visc + c.kappa_kappa)
    Y = 4.0 * w * tR * tQ * (tP * (w * cs2 * tQ + c.kappa_kappa) - c.beta_rho * visc)
    Z = X + w * tR * tQ
    m = {
        "a": w * tQ - c.eta,
        "b1": (X + w * tP * tQ) ** 2 - Y,
        "b2": Y,
        "c1": 2.0 * w * tR * tQ - Z,
        "c2": Z,
        "d": c.kappa_kappa * tP - tR * (visc + c.kappa_kappa) - c.beta_rho * visc,
    }
    rel = {"a": "gt", "b1": "ge", "b2": "ge", "c1": "gt", "c2": "ge", "d": "gt"}
    return ConditionSet({k: np.asarray(v, dtype=float) for k, v in m.items()}, rel)


def bdnk_causal(coeffs: BDNKCoefficients, strict: bool = False) -> ConditionResult:
    """Binary BDNK verdict: the four conditions are necessary and sufficient."""
    return _scalar_result(bdnk_margins(coeffs), strict)


# ---------------------------------------------------------------------- batch audit


@dataclass(frozen=True)
class Cell:
    """One row of an audit table."""

    id: str
    rho: float
    p: float
    P_bulk: float
    pi: tuple[float, ...]
    u_spatial: tuple[float, float, float]
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CellResult:
    id: str
    verdict: str
    margins: dict[str, Optional[float]]
    failed: list[str] = field(default_factory=list)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "verdict": self.verdict, "margins": self.margins, "failed": self.failed}
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class CausalityReport:
    cells: list[CellResult]
    relations: dict[str, str]
    theory: str
    strict: bool

    @property
    def summary(self) -> dict:
        n = len(self.cells)
        if n == 0:
            return {"n": 0}
        counts = {k: 0 for k in (CAUSAL, ACAUSAL, INDETERMINATE, INVALID)}
        for c in self.cells:
            counts[c.verdict] += 1
        return {
            "n": n,
            "frac_causal": counts[CAUSAL] / n,
            "frac_acausal": counts[ACAUSAL] / n,
            "frac_indeterminate": counts[INDETERMINATE] / n,
            "frac_invalid": counts[INVALID] / n,
        }

    def to_dict(self) -> dict:
        return {"cells": [c.to_dict() for c in self.cells], "summary": self.summary,
                "margin_relations": self.relations, "theory": self.theory, "strict": self.strict}


def audit_cell(cell: Cell, coeffs: Mapping, theory: str, strict: bool = False,
               tol_constraint: float = 1e-8, project_constraints: bool = False) -> tuple[CellResult, dict]:
    """Verdict and margins for one cell. Constraint or hypothesis failures give ``invalid``."""
    from .kinematics import normalize_velocity

    merged = dict(coeffs)
    merged.update(cell.overrides)
    try:
        if theory == "bdnk":
            merged.setdefault("p_plus_rho", cell.rho + cell.p)
            res = bdnk_causal(BDNKCoefficients.from_mapping(merged), strict)
            verdict = CAUSAL if res.passed else ACAUSAL
            return CellResult(cell.id, verdict, {f"bdnk_{k}": v for k, v in res.margins.items()}, res.failed), \
                {f"bdnk_{k}": v for k, v in res.relations.items()}
        u = normalize_velocity(cell.u_spatial)
        pi = ShearTensor(cell.pi, u)
        if project_constraints:
            pi = pi.projected()
        spec = shear_spectrum(pi, tol_constraint)
        state = DNMRState(cell.rho, cell.p, cell.P_bulk, spec.Lambda)
        v = dnmr_verdict(state, DNMRCoefficients.from_mapping(merged), strict)
        failed = [f"suff_{k}" for k in v.sufficient.failed] + [f"nec_{k}" for k in v.necessary.failed]
        return CellResult(cell.id, v.verdict, v.margins, failed), v.relations
    except (ConstraintViolation, PreconditionFailed) as exc:
        return CellResult(cell.id, INVALID, {}, [], f"{type(exc).__name__}: {exc}"), {}


def batch_audit(cells: Sequence[Cell], coeffs: Mapping, theory: str = "dnmr", strict: bool = False,
                tol_constraint: float = 1e-8, project_constraints: bool = False) -> CausalityReport:
    """Audit every cell in input order; output is independent of any parallel scheduling."""
    if theory not in ("dnmr", "bdnk"):
        raise SchemaError(f"unknown theory {theory!r}")
    results, relations = [], {}
    for cell in cells:
        r, rel = audit_cell(cell, coeffs, theory, strict, tol_constraint, project_constraints)
        results.append(r)
        relations.update(rel)
    return CausalityReport(results, dict(sorted(relations.items())), theory, strict)


COEFF_COLUMNS = tuple(f.name for f in fields(DNMRCoefficients)) + tuple(
    f.name for f in fields(BDNKCoefficients) if f.name not in ("tau_P", "eta", "zeta", "cs2"))


def cells_from_rows(rows: Sequence[Mapping[str, str]], start_row: int = 2) -> list[Cell]:
    """Parse CSV dict rows into cells; ``start_row`` is the file line of the first data row."""
    required = ("id", "rho", "p", "P_bulk") + PI_KEYS + ("u1", "u2", "u3")
    cells = []
    for k, row in enumerate(rows):
        lineno = start_row + k
        try:
            missing = [c for c in required if c not in row or row[c] in (None, "")]
            if missing:
                raise SchemaError(f"row {lineno}: missing {', '.join(missing)}")
            vals = {c: float(row[c]) for c in required if c != "id"}
            if not all(math.isfinite(v) for v in vals.values()):
                raise ValueError("non-finite value")
            over = {c: float(row[c]) for c in COEFF_COLUMNS if c in row and row[c] not in (None, "")}
        except ValueError as exc:
            raise SchemaError(f"row {lineno}: {exc}") from exc
        cells.append(Cell(str(row["id"]), vals["rho"], vals["p"], vals["P_bulk"],
                          tuple(vals[c] for c in PI_KEYS), (vals["u1"], vals["u2"], vals["u3"]), over))
    return cells
