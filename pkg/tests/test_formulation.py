import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from relfluid import formulation as F
from relfluid.errors import DegenerateSoundSpeed, GridTooCoarse, MissingTemperature
from relfluid.grid import GridField4
from relfluid.kinematics import acoustical_metric, normalize_velocity
from relfluid.thermo import EquationOfState

IDEAL = EquationOfState("ideal-gas", gamma=5 / 3)
CONF = EquationOfState("conformal")
TWO_PI = 2 * np.pi


def _grid(n, nz=5):
    dims = (n, n, n, nz)
    h = TWO_PI / n
    axes = [np.arange(k) * h for k in dims[:3]] + [np.arange(nz) * 1.0]
    return dims, (h, h, h, 1.0), np.meshgrid(*axes, indexing="ij")


def _sample(dims, spacing, hhat, s, u, eos=IDEAL):
    g = GridField4(dims, spacing, {"hhat": hhat, "s": s, "u": u}, (True,) * 4, {})
    return F.sample_from_field(g, eos)


def _constant(eos=IDEAL, n=6):
    dims = (n,) * 4
    u = np.zeros((4,) + dims)
    u[:] = normalize_velocity([0.3, -0.1, 0.2])[:, None, None, None, None]
    return _sample(dims, (0.1,) * 4, np.full(dims, 0.7), np.full(dims, 0.2), u, eos)


def test_constant_state_residuals_exactly_zero():
    smp = _constant()
    for name, check in F.CHECKS.items():
        _, norm = check(smp)
        assert norm == 0.0, name
    pack = F.auxiliary_pack(smp)
    assert not np.any(pack.C) and not np.any(pack.D) and not np.any(pack.Omega)


def test_constant_entropy_gives_zero_S_and_D():
    dims, spacing, (T, X, Y, Z) = _grid(12)
    hhat = 0.6 + 0.1 * np.sin(X + T)
    ui = 0.2 * np.sin(Y + T)
    u = np.stack([np.sqrt(1 + ui**2), ui, np.zeros(dims), np.zeros(dims)])
    pack = F.auxiliary_pack(_sample(dims, spacing, hhat, np.full(dims, 0.3), u))
    assert not np.any(pack.S) and not np.any(pack.D)


def _irrotational(n):
    dims, spacing, (T, X, Y, Z) = _grid(n)
    a, b = 2.0, 0.5
    dphi = np.stack([np.full(dims, -a), b * np.cos(X), 0.3 * np.cos(Y), np.zeros(dims)])
    h = np.sqrt(a * a - dphi[1] ** 2 - dphi[2] ** 2)
    u = dphi * np.array([-1, 1, 1, 1])[:, None, None, None, None] / h
    return _sample(dims, spacing, np.log(h), np.zeros(dims), u, CONF)


def test_gradient_flow_has_no_vorticity():
    smp = _irrotational(16)
    assert np.max(np.abs(F.vorticity_two_form(smp))) <= 1e-12
    assert F.lichnerowicz_residual(smp)[1] <= 1e-12
    assert F.vorticity_evolution_residual(smp)[1] <= 1e-11


def test_analytic_vorticity_second_order():
    errs = []
    for n in (16, 32):
        dims, spacing, (T, X, Y, Z) = _grid(n)
        hhat = 0.5 + 0.1 * np.sin(X)
        ui = 0.3 * np.sin(Y)
        u = np.stack([np.sqrt(1 + ui**2), ui, np.zeros(dims), np.zeros(dims)])
        smp = _sample(dims, spacing, hhat, np.zeros(dims), u, CONF)
        om = F.vorticity_two_form(smp)
        # Omega_21 = d_y(h u_1) - d_x(h u_y) = h 0.3 cos(y)
        exact = np.exp(hhat) * 0.3 * np.cos(Y)
        errs.append(np.max(np.abs(om[2, 1] - exact)))
    assert errs[0] / errs[1] >= 3.5


def _sympy_oracle(gamma=sp.Rational(5, 3)):
    t, x, y, z = xs = sp.symbols("t x y z")
    hhat = sp.Rational(1, 2) + sp.sin(x + t) / 10 + sp.cos(y) / 20
    s = sp.sin(x - y) / 5 + sp.cos(t) / 10
    ui = [3 * sp.sin(y + t) / 10, sp.cos(x) / 5, sp.sin(x + y) / 10]
    u = [sp.sqrt(1 + sum(c**2 for c in ui))] + ui
    eta = sp.diag(-1, 1, 1, 1)
    ul = [eta[a, a] * u[a] for a in range(4)]
    h = sp.exp(hhat)
    theta = (gamma - 1) * (h - 1) / gamma
    dtheta = h * (gamma - 1) / gamma
    cs2 = (gamma - 1) * (h - 1) / h
    K = sp.exp((gamma - 1) * s)
    n = ((gamma - 1) / gamma * (h - 1) / K) ** (1 / (gamma - 1))
    eps = sp.LeviCivita

    def vort(V):
        return [-sum(eps(a, b, c, d) * ul[b] * sp.diff(V[d], xs[c])
                     for b in range(4) for c in range(4) for d in range(4) if len({a, b, c, d}) == 4)
                for a in range(4)]

    omega = vort([h * c for c in ul])
    omega_l = [eta[a, a] * omega[a] for a in range(4)]
    S = [sp.diff(s, c) for c in xs]
    Su = [eta[a, a] * S[a] for a in range(4)]
    dh = [sp.diff(hhat, c) for c in xs]
    divu = sum(sp.diff(u[l], xs[l]) for l in range(4))
    Sdh = sum(Su[l] * dh[l] for l in range(4))
    vo = vort(omega_l)
    C = [vo[a]
         + sum(eps(a, b, c, d) * ul[b] * dh[c] * omega_l[d]
               for b in range(4) for c in range(4) for d in range(4) if len({a, b, c, d}) == 4) / cs2
         + (theta - dtheta) * (Su[a] * divu + u[a] * Sdh + sum(Su[l] * sp.diff(u[a], xs[l]) for l in range(4)))
         for a in range(4)]
    D = (sum(sp.diff(Su[l], xs[l]) for l in range(4)) + Sdh - Sdh / cs2) / n
    f = sp.lambdify(xs, [hhat, s] + ui + C + [D], "numpy")
    return f


@pytest.fixture(scope="module")
def oracle():
    return _sympy_oracle()


def test_C_and_D_match_symbolic_oracle(oracle):
    errs = []
    for n in (16, 32):
        dims, spacing, (T, X, Y, Z) = _grid(n)
        vals = [np.broadcast_to(v, dims) for v in oracle(T, X, Y, Z)]
        hhat, s, u1, u2, u3 = vals[:5]
        u = np.stack([np.sqrt(1 + u1**2 + u2**2 + u3**2), u1, u2, u3])
        pack = F.auxiliary_pack(_sample(dims, spacing, hhat, s, u))
        C, D = np.stack(vals[5:9]), vals[9]
        errs.append((np.max(np.abs(pack.C - C)) / np.max(np.abs(C)), np.max(np.abs(pack.D - D)) / np.max(np.abs(D))))
    assert errs[1][0] < 0.02 and errs[1][1] < 0.02
    assert errs[0][0] / errs[1][0] >= 3.5 and errs[0][1] / errs[1][1] >= 3.5


def test_omega_orthogonal_to_u():
    # the epsilon contraction makes omega.u vanish to rounding even on the grid
    for n in (16, 32):
        dims, spacing, (T, X, Y, Z) = _grid(n)
        ui = [0.3 * np.sin(Y + T), 0.2 * np.cos(X), 0.1 * np.sin(X + Y)]
        u = np.stack([np.sqrt(1 + sum(c**2 for c in ui))] + ui)
        smp = _sample(dims, spacing, 0.5 + 0.1 * np.sin(X + T), np.zeros(dims), u)
        om = F.auxiliary_pack(smp).omega
        assert np.max(np.abs(np.einsum("a...,a...->...", smp.u_low, om))) <= 1e-13


def test_null_forms():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 4))
    assert not np.any(F.null_form(None, a, a, "antisymmetric"))
    assert np.array_equal(F.null_form(None, a, b, "antisymmetric"), -F.null_form(None, b, a, "antisymmetric"))
    Gi = acoustical_metric(normalize_velocity([0.2, 0.4, -0.1]), 0.3).Ginv
    assert F.null_form(Gi, a, b) == F.null_form(Gi, b, a)
    k = np.array([np.sqrt(1 / 3), 1.0, 0, 0])
    Ginv_rest = acoustical_metric([1, 0, 0, 0], 1 / 3).Ginv
    assert abs(F.null_form(Ginv_rest, k, k)) <= 1e-15


@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8))
def test_null_form_symmetry_property(v):
    a, b = np.array(v[:4]), np.array(v[4:])
    Gi = acoustical_metric(normalize_velocity([0.1, 0.2, 0.3]), 0.5).Ginv
    assert F.null_form(Gi, a, b) == F.null_form(Gi, b, a)


def test_wave_operator_flat_static():
    errs = []
    for n in (16, 32):
        dims, spacing, (T, X, Y, Z) = _grid(n)
        u = np.zeros((4,) + dims)
        u[0] = 1.0
        smp = _sample(dims, spacing, np.full(dims, 0.5), np.zeros(dims), u, CONF)
        f = np.sin(X)
        div, exp = F.wave_operator(smp, f, np.ones(dims))
        errs.append((np.max(np.abs(div + f)), np.max(np.abs(div - exp))))
        assert np.max(np.abs(F.wave_operator(smp, np.full(dims, 3.0))[0])) == 0.0
    assert errs[0][0] / errs[1][0] >= 3.5 and errs[0][1] / errs[1][1] >= 3.5


def test_wave_operator_routes_agree():
    errs = []
    for n in (16, 32):
        dims, spacing, (T, X, Y, Z) = _grid(n)
        ui = [0.3 * np.sin(Y + T), 0.2 * np.cos(X), 0.0 * X]
        u = np.stack([np.sqrt(1 + sum(c**2 for c in ui))] + ui)
        smp = _sample(dims, spacing, 0.5 + 0.1 * np.sin(X + T), 0.1 * np.cos(Y), u)
        div, exp = F.wave_operator(smp, np.sin(X) * np.cos(Y + T))
        errs.append(np.max(np.abs(div - exp)))
    assert errs[0] / errs[1] >= 3.5


def test_wave_operator_degenerate():
    smp = _constant()
    with pytest.raises(DegenerateSoundSpeed):
        F.wave_operator(smp, smp.hhat, np.zeros_like(smp.hhat))


def test_perturbed_field_detected():
    dims, spacing, (T, X, Y, Z) = _grid(16)
    u = np.zeros((4,) + dims)
    u[0] = 1.0
    hhat = 0.6 + 0.05 * np.sin(X)  # static pressure gradient: not a solution
    smp = _sample(dims, spacing, hhat, np.zeros(dims), u)
    assert F.hhat_wave_residual(smp)[1] > 1e-3


def test_missing_temperature():
    smp = _constant()
    smp.closure = type(smp.closure)(**{**smp.closure.__dict__, "theta": None})
    with pytest.raises(MissingTemperature):
        F.lichnerowicz_residual(smp)


def test_too_coarse_grid():
    with pytest.raises(GridTooCoarse):
        GridField4((4, 5, 5, 5), (1.0,) * 4, {"a": np.zeros((4, 5, 5, 5))}, (True,) * 4, {})


def test_richardson_order():
    r = F.richardson_order([1.0, 0.25, 0.0625])
    assert r["pairwise"] == pytest.approx([2.0, 2.0]) and r["slope"] == pytest.approx(2.0)
