import mpmath as mp
import pytest

from nullcost.control import (hum_control, moment_residuals, moment_rhs, verify_null,
                              write_control_csv)
from nullcost.cost import observability_cost
from nullcost.fdsolve import Scheme
from nullcost.spectral import ModeVector, NormKind, ProblemSpec, norm

HEAT = ProblemSpec.heat(1)


def test_zero_datum_gives_zero_control():
    y0 = ModeVector(HEAT, [0, 0, 0])
    u = hum_control(y0, HEAT, 0.5)
    assert u.norm_L2 == 0 and all(c == 0 for c in u.coeffs)
    assert u(0.3) == 0


def test_moment_conditions_hold():
    y0 = ModeVector(HEAT, [1, -0.3, 0.2, 0.1])
    u = hum_control(y0, HEAT, 0.4, N=4)
    res = moment_residuals(u, y0)
    b = moment_rhs(y0, HEAT, 0.4, 4)
    assert max(abs(r) for r in res) <= mp.mpf(10) ** -50 * max(abs(x) for x in b)


def test_norm_is_bounded_by_dual_cost():
    # with the H^1_0 pairing, |u| <= C_D |y0|_{H^-1} for every datum
    for coeffs in ([1], [0, 1], [1, 1, -1], [0.2, 0, 0, 1]):
        y0 = ModeVector(HEAT, coeffs + [0] * (5 - len(coeffs)))
        u = hum_control(y0, HEAT, 0.5, N=5)
        c = observability_cost("cd", 0.5, 1, 5, pairing="H1").value
        assert u.norm_L2 <= c * norm(y0, NormKind.HMINUS1) * (1 + mp.mpf(10) ** -30)


def test_energy_matches_quadrature():
    y0 = ModeVector.single(HEAT, 1, N=3)
    u = hum_control(y0, HEAT, 0.5)
    with mp.workprec(u.precision_bits):
        q = mp.quad(lambda t: u(t) ** 2, [0, 0.25, 0.45, 0.5])
        assert abs(q - u.norm_L2**2) <= mp.mpf(10) ** -40 * q


def test_sample_matches_exact_evaluation():
    y0 = ModeVector.single(HEAT, 2, N=4)
    u = hum_control(y0, HEAT, 0.3)
    for t in (0, 0.1, 0.29):
        assert float(u.sample(t)[0]) == pytest.approx(float(u(t)), rel=1e-12, abs=1e-12)


def test_heat_control_nulls_controlled_modes():
    y0 = ModeVector.single(HEAT, 1, N=4)
    u = hum_control(y0, HEAT, 0.5)
    chk = verify_null(y0, u, HEAT, nx=200)
    free = verify_null(y0, None, HEAT, T=0.5, nx=200, N=4)
    with pytest.raises(ValueError):
        verify_null(y0, None, HEAT)
    assert chk.ratio < 1e-4 and chk.resolved
    assert free.ratio > 0.5 * 2.71828 ** (-mp.pi**2 * 0.5)
    assert chk.ratio_full >= chk.ratio


def test_transport_diffusion_control():
    spec = ProblemSpec.transport_diffusion(1, 1, 0.5)
    y0 = ModeVector.single(HEAT, 1, N=3)
    u = hum_control(y0, spec, 2.0)
    res = moment_residuals(u, y0)
    assert max(abs(r) for r in res) < mp.mpf(10) ** -40
    chk = verify_null(y0, u, spec, nx=150)
    assert chk.ratio < 1e-4


def test_implicit_euler_check_also_resolves():
    y0 = ModeVector.single(HEAT, 1, N=3)
    u = hum_control(y0, HEAT, 0.5)
    chk = verify_null(y0, u, HEAT, nx=100, nt=8000, scheme=Scheme.IMPLICIT_EULER, target=1e-3)
    assert chk.ratio < 1e-3


def test_invalid_horizon_and_interval():
    y0 = ModeVector.single(HEAT, 1)
    with pytest.raises(ValueError):
        hum_control(y0, HEAT, 0)
    with pytest.raises(ValueError):
        hum_control(y0, ProblemSpec.heat(2), 1)


def test_write_control_csv(tmp_path):
    u = hum_control(ModeVector.single(HEAT, 1, N=2), HEAT, 0.5)
    p = tmp_path / "u.csv"
    write_control_csv(u, p, n=5)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,u" and len(lines) == 6
    assert mp.mpf(lines[-1].split(",")[0]) == mp.mpf("0.5")


def test_single_mode_hand_oracle():
    # L = pi, one mode: b_1 = -e^{-T} (pi/2), G_11 = (1 - e^{-2T})/2
    spec = ProblemSpec.heat(mp.pi)
    y0 = ModeVector(spec, [1])
    u = hum_control(y0, spec, 1)
    with mp.workprec(u.precision_bits):
        b1 = -mp.exp(-1) * mp.pi / 2
        G11 = (1 - mp.exp(-2)) / 2
        assert abs(u.coeffs[0] - b1 / G11) <= mp.mpf(10) ** -60 * abs(b1 / G11)
        assert abs(u.norm_L2**2 - b1 * b1 / G11) <= mp.mpf(10) ** -60 * b1 * b1 / G11


def test_random_datum_bound_with_h1_pairing():
    import numpy as np
    rng = np.random.default_rng(5)
    c = observability_cost("cd", 0.5, 1, 8, pairing="H1").value
    for _ in range(3):
        y0 = ModeVector(HEAT, list(rng.standard_normal(3)) + [0] * 5)
        u = hum_control(y0, HEAT, 0.5, N=8)
        assert u.norm_L2 <= mp.mpf("1.05") * c * norm(y0, NormKind.HMINUS1)


def test_galerkin_optimality():
    # perturbing along the kernel of the moment map only raises the norm
    y0 = ModeVector(HEAT, [1, 0.5, -0.2])
    T = mp.mpf("0.4")
    u = hum_control(y0, HEAT, T, N=3)
    from nullcost.gramians import observation_gramian
    with mp.workprec(u.precision_bits):
        G = observation_gramian(HEAT, T, 4)
        # a direction in span(f_1..f_4) orthogonal to f_1..f_3
        sub = G[0:3, 0:3]
        col = mp.matrix([G[i, 3] for i in range(3)])
        w = mp.lu_solve(sub, col)
        d = [-w[0], -w[1], -w[2], mp.mpf(1)]
        base = list(u.coeffs) + [mp.mpf(0)]
        quad = lambda c: mp.fsum(c[i] * G[i, j] * c[j] for i in range(4) for j in range(4))
        for t in (mp.mpf("1e-3"), mp.mpf("-0.1"), mp.mpf(2)):
            pert = [a + t * b for a, b in zip(base, d)]
            moments = [mp.fsum(G[i, j] * pert[j] for j in range(4)) for i in range(3)]
            rhs = moment_rhs(y0, HEAT, T, 3)
            assert max(abs(m - r) for m, r in zip(moments, rhs)) < mp.mpf(10) ** -50
            assert quad(pert) > u.norm_L2**2


def test_free_decay_ratio():
    # no control: lambda_1 T = 20 leaves e^{-20} of the first mode
    T = 20 / float(mp.pi) ** 2
    y0 = ModeVector.single(HEAT, 1)
    chk = verify_null(y0, None, HEAT, T=T, nx=200)
    assert chk.ratio == pytest.approx(float(mp.exp(-20)), rel=1e-3)


def test_single_mode_fine_grid_ratio():
    spec = ProblemSpec.heat(mp.pi)
    y0 = ModeVector(spec, [1])
    u = hum_control(y0, spec, 1)
    chk = verify_null(y0, u, spec, nx=1000)
    assert chk.ratio <= 1e-6


def test_transport_diffusion_decay_regime_horizon():
    spec = ProblemSpec.transport_diffusion(1, 1, 0.5)
    y0 = ModeVector.single(spec, 1, N=6)
    u = hum_control(y0, spec, 4.3)
    chk = verify_null(y0, u, spec, nx=300)
    assert chk.ratio <= 1e-4


def test_refinement_reduces_error():
    y0 = ModeVector.single(HEAT, 1, N=4)
    u = hum_control(y0, HEAT, 0.5)
    r = [verify_null(y0, u, HEAT, nx=n).ratio for n in (200, 400, 800)]
    # the residual is discretisation error, so it falls at second order
    for a, b in zip(r, r[1:]):
        assert 3.5 < a / b < 4.5
