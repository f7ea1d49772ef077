import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relfluid.errors import DegenerateSoundSpeed, NoTimelikeCompletion, NotNormalized
from relfluid.grid import GridField4
from relfluid.kinematics import (MINKOWSKI, FluidState, Metric4, acceleration, acoustical_metric, enthalpy_current,
                                 expected_det_G, normalize_velocity, projector)
from relfluid.thermo import ThermoState

vec3 = st.lists(st.floats(-5, 5), min_size=3, max_size=3)


def test_normalize_examples():
    assert np.array_equal(normalize_velocity([0, 0, 0]), [1, 0, 0, 0])
    assert normalize_velocity([0.6, 0, 0])[0] == pytest.approx(math.sqrt(1.36), abs=1e-15)
    assert normalize_velocity([3, 4, 0])[0] == pytest.approx(math.sqrt(26), abs=1e-14)


def test_no_timelike_completion():
    bad = Metric4(np.diag([1.0, -1.0, 1.0, 1.0]))
    with pytest.raises(NoTimelikeCompletion):
        normalize_velocity([0, 0, 0], bad)


@given(vec3)
def test_normalization_property(ui):
    u = normalize_velocity(ui)
    assert abs(MINKOWSKI.dot(u, u) + 1) <= 1e-12 * (1 + u[0] ** 2) and u[0] > 0


def test_projector_examples():
    assert np.allclose(projector([1, 0, 0, 0]), np.diag([0, 1, 1, 1]), atol=0)
    u = normalize_velocity([0.6, 0, 0])
    P = projector(u)
    assert np.max(np.abs(P @ u)) <= 1e-12
    assert np.trace(P) == pytest.approx(3.0, abs=1e-12)


@given(vec3)
def test_projector_idempotent(ui):
    u = normalize_velocity(ui)
    P = projector(u)
    scale = 1 + u[0] ** 2
    assert np.max(np.abs(P @ P - P)) <= 1e-12 * scale**2
    assert np.max(np.abs(P @ u)) <= 1e-12 * scale**1.5


def test_projector_needs_normalized():
    with pytest.raises(NotNormalized):
        projector([1, 1, 0, 0])


def test_acoustical_examples():
    am = acoustical_metric([1, 0, 0, 0], 1 / 3)
    assert np.allclose(am.Ginv, np.diag([-1, 1 / 3, 1 / 3, 1 / 3]), atol=1e-15)
    assert np.linalg.det(am.G) == pytest.approx(-27.0, rel=1e-12)
    u = normalize_velocity([0.3, -0.2, 0.5])
    am1 = acoustical_metric(u, 1.0)
    assert np.array_equal(am1.G, MINKOWSKI.g)


def test_acoustical_degenerate():
    with pytest.raises(DegenerateSoundSpeed):
        acoustical_metric([1, 0, 0, 0], 0.0)


@settings(max_examples=200)
@given(vec3, st.floats(0.01, 1.0))
def test_acoustical_identities(ui, cs2):
    u = normalize_velocity(ui)
    am = acoustical_metric(u, cs2)
    s = (1 + u[0] ** 2) ** 2 / cs2
    assert np.max(np.abs(am.G @ am.Ginv - np.eye(4))) <= 1e-10 * s
    assert abs(u @ am.G @ u + 1) <= 1e-10 * s
    assert np.linalg.det(am.G) == pytest.approx(expected_det_G(cs2), rel=1e-9 * (1 + u[0] ** 4))


def test_det_general_metric():
    g = Metric4(np.diag([-2.0, 1.0, 3.0, 1.0]))
    u = np.array([1 / math.sqrt(2), 0, 0, 0])
    am = acoustical_metric(u, 0.25, g)
    assert np.linalg.det(am.G) == pytest.approx(expected_det_G(0.25, g), rel=1e-12)
    assert expected_det_G(0.25, g) == pytest.approx(-(0.25**-3) * 6, rel=1e-12)


def test_enthalpy_current_examples():
    w, chk = enthalpy_current(FluidState(np.array([1.0, 0, 0, 0]), ThermoState.simple(3, 1, 1 / 3, h=4.0)))
    assert np.array_equal(w, [4, 0, 0, 0]) and MINKOWSKI.dot(w, w) == -16
    u = normalize_velocity([0.6, 0, 0])
    w, chk = enthalpy_current(FluidState(u, ThermoState.simple(3, 1, 1 / 3, h=1.0)))
    assert np.array_equal(w, u)
    w, chk = enthalpy_current(FluidState(u, ThermoState.simple(3, 1, 1 / 3, h=2.0)))
    assert MINKOWSKI.dot(w, w) == pytest.approx(-4, abs=1e-12) and abs(chk) <= 1e-12


def _manufactured_u(n):
    L = 2 * np.pi
    x = np.arange(n) * L / n
    t = x.copy()
    T, X = np.meshgrid(t, x, indexing="ij")
    ux = 0.3 * np.sin(X + T)
    uy = 0.2 * np.cos(X)
    u = np.zeros((4, n, n, 5, 5))
    u[1] = ux[..., None, None]
    u[2] = uy[..., None, None]
    u[0] = np.sqrt(1 + u[1] ** 2 + u[2] ** 2)
    return u, (L / n, L / n, 1.0, 1.0), T, X


def test_acceleration_constant_is_zero():
    u = np.zeros((4, 6, 6, 6, 6))
    u[0] = 1.0
    assert np.max(np.abs(acceleration(u, (1, 1, 1, 1)))) == 0.0


def test_acceleration_matches_analytic_second_order():
    errs = []
    for n in (32, 64):
        u, sp, T, X = _manufactured_u(n)
        a = acceleration(u, sp)
        ux, uy = 0.3 * np.sin(X + T), 0.2 * np.cos(X)
        u0 = np.sqrt(1 + ux**2 + uy**2)
        dux = 0.3 * np.cos(X + T)
        ax = (u0 + ux) * dux
        ay = ux * (-0.2 * np.sin(X))
        errs.append(max(np.max(np.abs(a[1][..., 0, 0] - ax)), np.max(np.abs(a[2][..., 0, 0] - ay))))
    assert errs[0] / errs[1] >= 3.5


def test_acceleration_orthogonal_to_u():
    vals = []
    for n in (32, 64):
        u, sp, _, _ = _manufactured_u(n)
        a = acceleration(u, sp)
        vals.append(np.max(np.abs(-u[0] * a[0] + u[1] * a[1] + u[2] * a[2] + u[3] * a[3])))
    assert vals[0] / vals[1] >= 3.5
