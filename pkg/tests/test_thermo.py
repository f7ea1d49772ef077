import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relfluid.errors import DivisionByZero, DomainError, InsufficientSamples
from relfluid.thermo import EquationOfState, ThermoState, derived_scalars, first_law_residual, sound_speed_sq

CONFORMAL = EquationOfState("conformal")
POLY1 = EquationOfState("polytropic", kappa=1.0)
IDEAL = EquationOfState("ideal-gas", gamma=5.0 / 3.0)


def test_conformal_sound_speed():
    for rho in (0.1, 1.0, 7.0):
        assert sound_speed_sq(CONFORMAL, derived_scalars(CONFORMAL, rho)) == pytest.approx(1 / 3, abs=1e-15)


def test_polytropic_sound_speed_and_pressure():
    st_ = derived_scalars(POLY1, 0.5)
    assert st_.cs2 == pytest.approx(1.0, abs=1e-15)
    assert st_.p == pytest.approx(0.25, abs=1e-15)


def test_stiff_analytic_eos():
    eos = EquationOfState("analytic", p_func=lambda r, n: r, dp_drho_func=lambda r, n: np.ones_like(r))
    assert sound_speed_sq(eos, ThermoState.simple(2.0, 2.0, 0.0)) == 1.0


@given(st.floats(0.05, 5.0), st.floats(0.1, 3.0))
def test_polytropic_cs2_closed_form(rho, kappa):
    eos = EquationOfState("polytropic", kappa=kappa)
    assert float(eos.sound_speed_sq(rho)) == pytest.approx((kappa + 1) * rho**kappa, rel=1e-14)


def test_enthalpy_and_hhat():
    eos = EquationOfState("analytic", p_func=lambda r, n: r / 3, dp_drho_func=lambda r, n: np.full_like(r, 1 / 3))
    st_ = derived_scalars(eos, 3.0, n=1.0)
    assert st_.p == 1.0 and st_.h == 4.0
    st_e = derived_scalars(eos, 3 * math.e / 4, n=1.0)
    assert st_e.hhat == pytest.approx(1.0, abs=1e-15)


def test_zero_density_enthalpy_raises():
    with pytest.raises(DivisionByZero):
        derived_scalars(CONFORMAL, 1.0, n=0.0, need_enthalpy=True)


def test_negative_density_raises():
    with pytest.raises(DomainError):
        derived_scalars(CONFORMAL, -1.0)


def test_invalid_parameters():
    with pytest.raises(DomainError):
        EquationOfState("polytropic", kappa=0.0)
    with pytest.raises(DomainError):
        EquationOfState("ideal-gas", gamma=1.0)


def test_derived_scalars_pure():
    a = derived_scalars(IDEAL, 2.0, n=1.0)
    b = derived_scalars(IDEAL, 2.0, n=1.0)
    assert a == b


def test_superluminal_flag():
    assert ThermoState.simple(1.0, 1.0, 4.0).flagged
    assert not ThermoState.simple(1.0, 1.0, 1.0).flagged


def test_ideal_gas_sound_speed_two_variable():
    rho, n = 2.0, 1.0
    p = float(IDEAL.pressure(rho, n))
    ref = (IDEAL.gamma - 1) + n / (p + rho) * (1 - IDEAL.gamma)
    assert float(IDEAL.sound_speed_sq(rho, n)) == pytest.approx(ref, rel=1e-15)


def test_entropy_roundtrip():
    n = IDEAL.density_from_entropy(2.0, float(IDEAL.entropy(2.0, 0.7)))
    assert float(n) == pytest.approx(0.7, rel=1e-12)


def _ideal_path(delta, count=6, offset=0.0):
    path = []
    for k in range(count):
        rho = 1.0 + k * delta
        n = 0.5 + 0.3 * k * delta
        st_ = derived_scalars(IDEAL, rho, n=n)
        if offset and k % 2:
            st_ = ThermoState(**{**st_.__dict__, "p": st_.p + offset})
        path.append(st_)
    return path


def test_first_law_constant_path():
    path = [derived_scalars(IDEAL, 2.0, n=1.0)] * 4
    assert first_law_residual(IDEAL, path, 0.1) == 0.0


def test_first_law_first_order():
    r1 = first_law_residual(IDEAL, _ideal_path(1e-3), 1e-3)
    r2 = first_law_residual(IDEAL, _ideal_path(5e-4), 5e-4)
    assert r1 / r2 == pytest.approx(2.0, rel=0.05)


def test_first_law_polytropic_isentropic():
    def path(d):
        return [derived_scalars(POLY1, 0.2 + k * d) for k in range(6)]

    r1, r2 = first_law_residual(POLY1, path(1e-2), 1e-2), first_law_residual(POLY1, path(5e-3), 5e-3)
    assert r2 < r1 and r1 / r2 == pytest.approx(2.0, rel=0.1)


def test_first_law_detects_offset():
    eps, delta = 1e-3, 1e-2
    assert first_law_residual(IDEAL, _ideal_path(delta, offset=eps), delta) >= eps / 2


def test_first_law_needs_three_samples():
    with pytest.raises(InsufficientSamples):
        first_law_residual(IDEAL, _ideal_path(0.1, count=2), 0.1)


@settings(max_examples=50)
@given(st.floats(0.2, 10.0), st.floats(0.05, 0.95))
def test_ideal_gas_admissible_cs2(rho, frac):
    cs2 = float(IDEAL.sound_speed_sq(rho, frac * rho))
    assert 0.0 < cs2 <= 1.0
