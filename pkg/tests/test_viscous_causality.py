import csv
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relfluid.errors import ConsistencyError, ConstraintViolation, PreconditionFailed, SchemaError
from relfluid.kinematics import normalize_velocity
from relfluid.viscous_causality import (BDNKCoefficients, Cell, DNMRCoefficients, DNMRState, ShearTensor,
                                        batch_audit, bdnk_causal, cells_from_rows, dnmr_necessary, dnmr_sufficient,
                                        dnmr_verdict, shear_spectrum)

FIX = Path(__file__).parent / "fixtures"
REST = np.array([1.0, 0, 0, 0])
EQ = DNMRState(3.0, 1.0, 0.0, (0.0, 0.0, 0.0))
BASE = dict(tau_P=1.0, tau_pi=1.0, eta=0.2, zeta=0.1, cs2=1 / 3)


def boost(beta, axis=1):
    g = 1 / math.sqrt(1 - beta**2)
    L = np.eye(4)
    L[0, 0] = L[axis, axis] = g
    L[0, axis] = L[axis, 0] = g * beta
    return L


# shear spectrum ---------------------------------------------------------------

def test_zero_shear():
    assert shear_spectrum(ShearTensor((0.0,) * 10, REST)).Lambda == (0.0, 0.0, 0.0)


def test_rest_diagonal_shear():
    a = 0.7
    pi = np.diag([0, -2 * a, a, a])
    lam = shear_spectrum(ShearTensor.from_matrix(pi, REST)).Lambda
    assert lam == pytest.approx((-2 * a, a, a), abs=1e-14)


@pytest.mark.parametrize("beta,axis", [(0.5, 1), (-0.8, 2), (0.9, 3)])
def test_boosted_shear_same_spectrum(beta, axis):
    pi = np.diag([0, -1.4, 0.3, 1.1])
    L = boost(beta, axis)
    lam = shear_spectrum(ShearTensor.from_matrix(L @ pi @ L.T, L @ REST)).Lambda
    assert lam == pytest.approx((-1.4, 0.3, 1.1), abs=1e-10)


def test_shear_constraint_violation():
    with pytest.raises(ConstraintViolation):
        shear_spectrum(ShearTensor.from_matrix(np.diag([0, 1.0, 0, 0]), REST))
    pi = ShearTensor.from_matrix(np.diag([0, 1.0 + 1e-6, -0.5, -0.5]), REST)
    assert shear_spectrum(pi, tol_constraint=1e-4).Lambda[2] == pytest.approx(1.0, abs=1e-5)
    assert abs(sum(shear_spectrum(pi.projected()).Lambda)) <= 1e-12


@settings(max_examples=100)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_spectrum_properties(ui, m):
    u = normalize_velocity(ui)
    raw = np.zeros((4, 4))
    raw[1:, 1:] = [[m[0], m[1], m[2]], [m[1], m[3], m[4]], [m[2], m[4], m[5]]]
    pi = ShearTensor.from_matrix(raw, u).projected()
    sp = shear_spectrum(pi, tol_constraint=1e-6)
    l1, l2, l3 = sp.Lambda
    scale = 1 + np.max(np.abs(pi.matrix))
    assert l1 <= l2 <= l3 and abs(l1 + l2 + l3) <= 1e-8 * scale and l1 <= 1e-9 * scale <= l3 + 2e-9 * scale


# DNMR ----------------------------------------------------------------------------

def test_equilibrium_sufficient_margins():
    res = dnmr_sufficient(EQ, DNMRCoefficients(**BASE))
    assert res.passed and "h" not in res.margins
    assert res.margins["e"] == pytest.approx(-2.3, abs=1e-12)
    assert res.margins["a"] == pytest.approx(3.8, abs=1e-12)


def test_perfect_fluid_limit_passes():
    for cs2 in (0.1, 1 / 3, 1.0):
        c = DNMRCoefficients(tau_P=1.0, tau_pi=1.0, cs2=cs2)
        assert dnmr_necessary(EQ, c).passed and dnmr_sufficient(EQ, c).passed
    # strict mode reads (b) as > 0 and (c) as < 0; both margins are exactly 0 here
    assert dnmr_sufficient(EQ, DNMRCoefficients(tau_P=1.0, tau_pi=1.0), strict=True).failed == ["b", "c"]


def test_large_lambda3_fails_a():
    c = DNMRCoefficients(**{**BASE, "tau_pipi": 1.0, "delta_pipi": 1.0})
    lam3 = 3.9
    st_ = DNMRState(3.0, 1.0, 0.0, (-lam3 / 2, -lam3 / 2, lam3))
    res = dnmr_sufficient(st_, c)
    assert "a" in res.failed and res.margins["a"] < 0


def test_bulk_dominated_fails_f():
    v = dnmr_verdict(EQ, DNMRCoefficients(**{**BASE, "zeta": 10.0}))
    assert v.verdict == "Acausal"
    assert v.margins["nec_f_1"] == pytest.approx(4 - 0.2 - 0.2 / 3 - 10 - 4 / 3, abs=1e-10)
    assert v.margins["nec_f_1"] == pytest.approx(-7.6, abs=1e-10)


def test_verdict_tristate():
    assert dnmr_verdict(EQ, DNMRCoefficients(**BASE)).verdict == "Causal"
    near = DNMRState(3.0, 1.0, 0.0, (-3.63, 0.0, 3.63))
    v = dnmr_verdict(near, DNMRCoefficients(**{**BASE, "tau_pipi": 0.1, "delta_pipi": 0.1}))
    assert v.verdict == "Indeterminate"


def test_strict_mode_reads_closure():
    c = DNMRCoefficients(**{**BASE, "tau_pipi": 3.0, "delta_pipi": 0.5})
    res = dnmr_sufficient(EQ, c)
    assert res.margins["c"] == 0.0
    assert "c" not in res.failed
    assert "c" in dnmr_sufficient(EQ, c, strict=True).failed


def test_hypotheses_enforced():
    with pytest.raises(PreconditionFailed):
        DNMRCoefficients(tau_P=0.0)
    with pytest.raises(PreconditionFailed):
        DNMRCoefficients(eta=-1.0)
    with pytest.raises(PreconditionFailed):
        dnmr_verdict(DNMRState(3.0, 1.0, 0.0, (-5.0, 2.5, 2.5)), DNMRCoefficients(**BASE))


def test_printed_conditions_do_not_imply_necessary():
    # With tau_pipi = delta_pipi = delta_Ppi = 0 the sufficient set has no term
    # controlling lambda_Ppi Lambda_1 / tau_P, which enters necessary (e_1).
    st_ = DNMRState(8.0, 2.0, 0.0, (-2.0, 1.0, 1.0))
    c = DNMRCoefficients(tau_P=1.0, tau_pi=1.0, eta=1.0, lambda_Ppi=3.0, cs2=0.1)
    assert dnmr_sufficient(st_, c).passed
    nec = dnmr_necessary(st_, c)
    assert nec.failed == ["e_1"]
    assert nec.margins["e_1"] == pytest.approx(1 + 1 / 3 - 6 + 0.8, abs=1e-12)
    with pytest.raises(ConsistencyError):
        dnmr_verdict(st_, c)


# BDNK ----------------------------------------------------------------------------

def test_bdnk_causal_fixture():
    c = BDNKCoefficients(4.0, 1 / 3, tau_R=1.0, tau_P=3.0, tau_Q=2.0, eta=0.2, zeta=0.1, kappa_kappa=1.0,
                         beta_rho=1.0)
    res = bdnk_causal(c)
    assert res.passed and res.margins["d"] == pytest.approx(19 / 15, abs=1e-12)


def test_bdnk_acausal_fixture():
    c = BDNKCoefficients(4.0, 1 / 3, tau_R=1.0, tau_P=1.0, tau_Q=1.0, eta=0.2, zeta=0.1, beta_rho=1.0)
    res = bdnk_causal(c)
    assert not res.passed and "d" in res.failed and res.margins["d"] < 0


def test_bdnk_zero_dissipation_boundary():
    c = BDNKCoefficients(4.0, 1 / 3, tau_R=1.0, tau_P=1.0, tau_Q=1.0)
    ns, s = bdnk_causal(c), bdnk_causal(c, strict=True)
    assert ns.margins["d"] == 0.0 and ns.passed and not s.passed and s.failed == ["d"]


def test_bdnk_hypotheses():
    with pytest.raises(PreconditionFailed):
        BDNKCoefficients(4.0, 1 / 3, tau_R=0.0, tau_P=1.0, tau_Q=1.0)


# batch audit ---------------------------------------------------------------------

def _rows(name):
    with open(FIX / name, newline="") as fh:
        return list(csv.DictReader(fh))


def _coeffs(name):
    import json
    return json.loads((FIX / name).read_text())


def test_empty_audit():
    rep = batch_audit([], BASE)
    assert rep.to_dict()["cells"] == [] and rep.summary == {"n": 0}


def test_three_cell_fractions():
    rep = batch_audit(cells_from_rows(_rows("cells.csv")), _coeffs("dnmr_coeffs.json"))
    s = rep.summary
    assert [c.verdict for c in rep.cells] == ["Causal", "Acausal", "Indeterminate"]
    assert (s["frac_causal"], s["frac_acausal"], s["frac_indeterminate"]) == (1 / 3, 1 / 3, 1 / 3)


def test_single_acausal_cell():
    cells = cells_from_rows(_rows("cells.csv"))[1:2]
    assert batch_audit(cells, _coeffs("dnmr_coeffs.json")).summary["frac_acausal"] == 1.0


def test_duplicate_cells_identical():
    cell = cells_from_rows(_rows("cells.csv"))[2]
    rep = batch_audit([cell, cell], _coeffs("dnmr_coeffs.json"))
    assert rep.cells[0].margins == rep.cells[1].margins and rep.cells[0].verdict == rep.cells[1].verdict


def test_bdnk_batch():
    rep = batch_audit(cells_from_rows(_rows("bdnk_cells.csv")), _coeffs("bdnk_coeffs.json"), "bdnk")
    assert [c.verdict for c in rep.cells] == ["Causal", "Acausal", "Causal"]
    strict = batch_audit(cells_from_rows(_rows("bdnk_cells.csv")), _coeffs("bdnk_coeffs.json"), "bdnk", True)
    assert strict.cells[2].verdict == "Acausal"


def test_invalid_cell_bucket():
    bad = Cell("bad", 3.0, 1.0, 0.0, (0, 0, 0, 0, 1.0, 0, 0, 0, 0, 0), (0, 0, 0))
    rep = batch_audit([bad], BASE)
    assert rep.cells[0].verdict == "invalid" and rep.summary["frac_invalid"] == 1.0
    assert rep.cells[0].error.startswith("ConstraintViolation")


def test_malformed_row_number():
    rows = _rows("cells.csv") * 2
    rows[5] = {**rows[5], "rho": "abc"}
    with pytest.raises(SchemaError, match="row 7"):
        cells_from_rows(rows)


def test_unknown_theory():
    with pytest.raises(SchemaError):
        batch_audit([], BASE, "israel")
