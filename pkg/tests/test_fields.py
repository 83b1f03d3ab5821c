import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicem import (
    Background,
    CGOParams,
    bump_field,
    cgo_pair_electric,
    cgo_pair_magnetic,
    cone_contains,
    constant_kernel,
    herglotz_electric,
    herglotz_magnetic,
    holder_source,
    make_cone,
    maxwell_residual,
    plane_wave_incident,
    rho_p,
)
from conicem.errors import (
    NonTransversePolarization,
    PreconditionViolated,
    SupportMarginViolated,
    WavenumberMismatch,
)
from conicem.fields import (
    HerglotzKernel,
    exp_field,
    fd_curl,
    herglotz_kernel_magnetic,
    linear_combination,
    plateau_field,
    rotational_power_field,
    zero_field,
)

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def random_params(rng, tau_range=(0.5, 200.0), k_range=(0.5, 5.0)):
    v = rng.normal(size=3)
    d = v / np.linalg.norm(v)
    w = rng.normal(size=3)
    w -= (w @ d) * d
    d_perp = w / np.linalg.norm(w)
    return CGOParams(d=d, d_perp=d_perp,
                     tau=float(rng.uniform(*tau_range)),
                     k=float(rng.uniform(*k_range)))


class TestRhoP:
    def test_printed_example(self):
        params = CGOParams(d=-E3, d_perp=E1, tau=10.0, k=1.0)
        rho, p = rho_p(params)
        np.testing.assert_allclose(rho, [1j * np.sqrt(101.0), 0.0, -10.0], atol=1e-14)
        np.testing.assert_allclose(p, [1.0, 0.0, 1j * np.sqrt(1.01)], atol=1e-14)
        assert abs(rho @ p) < 1e-14
        np.testing.assert_allclose(np.cross(rho, p), [0.0, 0.1, 0.0], atol=1e-14)

    def test_zero_wavenumber(self):
        params = CGOParams(d=-E3, d_perp=E1, tau=3.0, k=0.0)
        rho, p = rho_p(params)
        np.testing.assert_allclose(rho, 3.0 * (-E3 + 1j * E1), atol=1e-15)
        np.testing.assert_allclose(p, E1 + 1j * E3, atol=1e-15)
        assert abs(rho @ p) < 1e-15

    def test_identities_over_draws(self, rng):
        for _ in range(100):
            params = random_params(rng)
            rho, p = rho_p(params)
            k, tau = params.k, params.tau
            assert abs(rho @ p) <= 1e-12 * np.linalg.norm(rho) * np.linalg.norm(p)
            wedge_err = np.linalg.norm(
                np.cross(rho, p) + k**2 / tau * np.cross(params.d, params.d_perp))
            assert wedge_err <= 1e-10 * k**2 / tau
            assert abs(rho @ rho + k**2) <= 1e-10 * k**2

    def test_orthogonality_enforced(self):
        with pytest.raises(PreconditionViolated):
            CGOParams(d=E3, d_perp=E3, tau=1.0, k=1.0)
        with pytest.raises(PreconditionViolated):
            CGOParams(d=2.0 * E3, d_perp=E1, tau=1.0, k=1.0)


class TestCGOPairs:
    def test_electric_value_at_origin(self, bg):
        params = CGOParams(d=-E3, d_perp=E1, tau=4.0, k=bg.k)
        rho, p = rho_p(params)
        V, W = cgo_pair_electric(params, bg)
        np.testing.assert_allclose(V(np.zeros(3)), p, atol=1e-15)
        np.testing.assert_allclose(W(np.zeros(3)),
                                   np.cross(rho, p) / (1j * bg.omega * bg.mu0),
                                   atol=1e-15)

    def test_analytic_maxwell_residual_vanishes(self, bg, rng):
        params = CGOParams(d=-E3, d_perp=E2, tau=7.0, k=bg.k)
        V, W = cgo_pair_electric(params, bg)
        pts = rng.normal(size=(20, 3)) * 0.3
        res1 = V.curl(pts) - 1j * bg.omega * bg.mu0 * W(pts)
        res2 = W.curl(pts) + 1j * bg.omega * bg.eps0 * V(pts)
        scale = np.abs(V(pts)).max()
        assert np.abs(res1).max() <= 1e-14 * scale
        assert np.abs(res2).max() <= 1e-14 * scale

    def test_fd_residual_second_order(self, bg):
        params = CGOParams(d=-E3, d_perp=E1, tau=3.0, k=bg.k)
        V, W = cgo_pair_electric(params, bg)
        x = np.array([0.05, -0.02, 0.1])
        r_h = [np.linalg.norm(
            fd_curl(V, x, h) - 1j * bg.omega * bg.mu0 * W(x)) for h in (1e-2, 5e-3)]
        assert r_h[0] / r_h[1] == pytest.approx(4.0, rel=0.3)

    def test_decay_bound_on_cone(self, bg, rng, cone30):
        params = CGOParams(d=-E3, d_perp=E1, tau=25.0, k=bg.k)
        _, p = rho_p(params)
        V, _ = cgo_pair_electric(params, bg)
        delta = cone30.delta
        drawn = 0
        while drawn < 20:
            x = rng.uniform(-1, 1, size=3)
            if not cone_contains(cone30, x):
                continue
            drawn += 1
            bound = np.sqrt(3.0) * np.linalg.norm(p) * np.exp(
                -params.tau * delta * np.linalg.norm(x))
            assert np.linalg.norm(V(x)) <= bound * (1 + 1e-12)

    def test_magnetic_pair_and_duality(self, bg, rng):
        params = CGOParams(d=-E3, d_perp=E1, tau=5.0, k=bg.k)
        rho, p = rho_p(params)
        Vm, Wm = cgo_pair_magnetic(params, bg)
        np.testing.assert_allclose(Wm(np.zeros(3)), p, atol=1e-15)
        res1 = Vm.curl(np.zeros((1, 3))) - 1j * bg.omega * bg.mu0 * Wm(np.zeros((1, 3)))
        assert np.abs(res1).max() < 1e-14
        # duality: swapping eps<->mu and (E,H) -> (H,-E) maps electric to magnetic
        bg_swapped = Background(omega=bg.omega, eps0=bg.mu0, mu0=bg.eps0)
        Ve, We = cgo_pair_electric(params, bg_swapped)
        pts = rng.normal(size=(10, 3)) * 0.4
        np.testing.assert_allclose(Wm(pts), Ve(pts), atol=1e-13)
        np.testing.assert_allclose(Vm(pts), -We(pts), atol=1e-13)

    def test_wavenumber_mismatch(self, bg):
        params = CGOParams(d=-E3, d_perp=E1, tau=5.0, k=2.0 * bg.k)
        with pytest.raises(WavenumberMismatch):
            cgo_pair_electric(params, bg)


class TestPlaneWave:
    def test_basis_cross_product(self, bg):
        E, H = plane_wave_incident(E1, E3, bg)
        x = np.array([0.0, 0.0, 0.7])
        phase = np.exp(1j * bg.k * 0.7)
        np.testing.assert_allclose(E(x), E1 * phase, atol=1e-15)
        np.testing.assert_allclose(H(x), bg.k / (bg.omega * bg.mu0) * E2 * phase,
                                   atol=1e-15)

    def test_transversality_enforced(self, bg):
        with pytest.raises(NonTransversePolarization):
            plane_wave_incident(E3, E3, bg)

    def test_fd_maxwell_residual_second_order(self, bg):
        E, H = plane_wave_incident(E1, E3, bg)
        J0 = zero_field()
        x = np.array([0.1, 0.2, -0.3])
        r1a, r2a = maxwell_residual(E, H, J0, J0, bg, x, 1e-2)
        r1b, r2b = maxwell_residual(E, H, J0, J0, bg, x, 5e-3)
        assert np.linalg.norm(r1a) / np.linalg.norm(r1b) == pytest.approx(4.0, rel=0.3)
        assert np.linalg.norm(r2a) / np.linalg.norm(r2b) == pytest.approx(4.0, rel=0.3)


class TestHerglotz:
    def test_constant_kernel_closed_form(self, rng):
        c = np.array([0.3, -1.0, 0.5])
        field = herglotz_electric(constant_kernel(c, k1=1.3), 32)
        pts = rng.normal(size=(50, 3))
        pts *= (rng.uniform(0.05, 10.0 / 1.3, 50) / np.linalg.norm(pts, axis=1))[:, None]
        r = np.linalg.norm(pts, axis=1)
        closed = 4.0 * np.pi * np.sinc(1.3 * r / np.pi)[:, None] * c
        assert np.abs(field(pts) - closed).max() <= 1e-8

    def test_value_at_origin_and_zero_shell(self):
        c = np.array([1.0, 0.0, 0.0])
        field = herglotz_electric(constant_kernel(c, k1=2.0), 24)
        np.testing.assert_allclose(field(np.zeros(3)), 4.0 * np.pi * c, rtol=1e-12)
        x = np.array([np.pi / 2.0, 0.0, 0.0])  # |x| = pi/k1
        assert np.abs(field(x)).max() < 1e-12

    def test_curl_curl_residual_fd(self):
        # curl curl E = k1^2 E needs a divergence-free wave, i.e. a tangential
        # kernel; g(d) = d ^ c is the canonical choice.  Non-tangential kernels
        # are accepted (each plane wave is Helmholtz) but are not curl-curl
        # solutions.
        k1 = 1.1
        c = np.array([0.0, 1.0, 0.0], dtype=complex)
        kern = HerglotzKernel(g=lambda d: np.cross(d, c), k1=k1)
        field = herglotz_electric(kern, 24)
        x = np.array([0.3, -0.2, 0.5])
        curl_field = lambda y: field.curl(y)
        res = [np.linalg.norm(fd_curl(curl_field, x, h) - k1**2 * field(x))
               for h in (1e-2, 5e-3)]
        assert res[0] / res[1] == pytest.approx(4.0, rel=0.35)

    def test_radial_kernel_gives_zero_magnetic(self, bg):
        kern = HerglotzKernel(g=lambda d: d.astype(complex), k1=bg.k)
        H = herglotz_magnetic(kern, bg, 16)
        pts = np.array([[0.4, 0.1, -0.2], [0.0, 0.0, 0.0]])
        assert np.abs(H(pts)).max() < 1e-14

    def test_kernel_relation_exact(self, bg):
        c = np.array([0.2, 0.7, -0.1], dtype=complex)
        kern = constant_kernel(c, k1=bg.k)
        f = herglotz_kernel_magnetic(kern, bg)
        dirs = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0],
                         [0.6, 0.8, 0.0]])
        np.testing.assert_allclose(f(dirs),
                                   bg.k / (bg.omega * bg.mu0) * np.cross(dirs, c),
                                   atol=1e-15)

    def test_magnetic_equals_scaled_curl(self, bg, rng):
        kern = constant_kernel([1.0, -0.5, 0.2], k1=bg.k)
        E = herglotz_electric(kern, 24)
        H = herglotz_magnetic(kern, bg, 24)
        pts = rng.normal(size=(10, 3))
        np.testing.assert_allclose(H(pts),
                                   E.curl(pts) / (1j * bg.omega * bg.mu0), atol=1e-12)
        # independent finite-difference spot check
        x = pts[0]
        fd = fd_curl(E, x, 1e-4) / (1j * bg.omega * bg.mu0)
        np.testing.assert_allclose(H(x), fd, atol=1e-6)

    def test_rate_validation(self):
        with pytest.raises(PreconditionViolated):
            constant_kernel([1.0, 0, 0], k1=1.0, rates=(3.0, 2.5, 3.0, 1.0))
        kern = constant_kernel([1.0, 0, 0], k1=1.0, rates=(3.0, 1.0, 3.0, 1.5))
        assert kern.rates == (3.0, 1.0, 3.0, 1.5)

    def test_order_precondition(self):
        with pytest.raises(PreconditionViolated):
            herglotz_electric(constant_kernel([1.0, 0, 0], k1=1.0), 3)


class TestCompactSources:
    def test_bump_values(self):
        pol = np.array([2.0, 0.0, 1.0j])
        f = bump_field([0.5, 0, 0], 0.4, pol)
        np.testing.assert_allclose(f(np.array([0.5, 0, 0])), pol * np.exp(-1.0),
                                   rtol=1e-14)
        assert np.abs(f(np.array([0.9, 0, 0]))).max() == 0.0
        assert np.abs(f(np.array([2.0, 0, 0]))).max() == 0.0

    def test_bump_curl_matches_fd(self):
        f = bump_field([0.0, 0, 0], 1.0, [1.0, 0.0, 0.0])
        x = np.array([0.2, 0.3, -0.1])
        np.testing.assert_allclose(f.curl(x), fd_curl(f, x, 1e-5), atol=1e-8)

    def test_plateau_center_value(self):
        f = plateau_field([1.0, 0, 0], 0.3, [0.0, 2.0, 0.0])
        np.testing.assert_allclose(f(np.array([1.0, 0, 0])), [0.0, 2.0, 0.0],
                                   rtol=1e-14)
        assert np.abs(f(np.array([1.31, 0, 0]))).max() == 0.0

    def test_holder_source_split(self):
        c0 = np.array([1.0, 1.0j, 0.0])
        f = holder_source([0, 0, 0], 0.5, c0, 2.0, E1)
        np.testing.assert_allclose(f(np.zeros(3)), c0, atol=1e-15)
        x = np.array([0.25, 0.0, 0.0])
        np.testing.assert_allclose(f(x), c0 + 2.0 * 0.5 * E1, atol=1e-15)
        assert f.smoothness == "holder" and f.holder_alpha == 0.5

    def test_rotational_power_field_curl(self, rng):
        for alpha in (0.0, 0.5):
            f = rotational_power_field([0, 0, 0], alpha, [1.0, 0, 0])
            x = rng.uniform(0.1, 0.5, size=3)
            np.testing.assert_allclose(f.curl(x), fd_curl(f, x, 1e-6), atol=1e-6)
        const = rotational_power_field([0, 0, 0], 0.0, [1.0, 0, 0])
        np.testing.assert_allclose(const.curl(np.array([0.3, 0.1, 0.2])),
                                   [1.0, 0, 0], atol=1e-14)


class TestMaxwellResidual:
    def test_manufactured_pair_truncation_only(self, bg):
        m = np.array([2.0, -1.0, 0.5])
        qE = np.array([1.0, 0.5, -0.2], dtype=complex)
        qH = np.array([0.1, -0.4, 0.9], dtype=complex)
        rho = 1j * m
        E = exp_field(qE, rho)
        H = exp_field(qH, rho)
        J1 = exp_field(np.cross(rho, qE) - 1j * bg.omega * bg.mu0 * qH, rho)
        J2 = exp_field(np.cross(rho, qH) + 1j * bg.omega * bg.eps0 * qE, rho)
        x = np.array([0.3, 0.1, -0.2])
        r1a, r2a = maxwell_residual(E, H, J1, J2, bg, x, 1e-2)
        r1b, r2b = maxwell_residual(E, H, J1, J2, bg, x, 5e-3)
        assert np.linalg.norm(r1a) / np.linalg.norm(r1b) == pytest.approx(4, rel=0.3)
        assert np.linalg.norm(r2a) / np.linalg.norm(r2b) == pytest.approx(4, rel=0.3)

    def test_cgo_pair_second_order(self, bg):
        params = CGOParams(d=-E3, d_perp=E1, tau=2.0, k=bg.k)
        V, W = cgo_pair_electric(params, bg)
        J0 = zero_field()
        x = np.array([0.1, 0.0, 0.2])
        r1 = [np.linalg.norm(maxwell_residual(V, W, J0, J0, bg, x, h)[0])
              for h in (1e-2, 5e-3)]
        assert r1[0] / r1[1] == pytest.approx(4.0, rel=0.3)

    def test_support_margin_enforced(self, bg):
        f = bump_field([0, 0, 0], 0.5, [1.0, 0, 0])
        J0 = zero_field()
        with pytest.raises(SupportMarginViolated):
            maxwell_residual(f, f, J0, J0, bg, np.array([0.49, 0, 0]), 0.01)


class TestFieldCombinators:
    def test_linear_combination_and_smoothness(self):
        a = holder_source([0, 0, 0], 0.25, [1.0, 0, 0], 1.0, E1)
        b = bump_field([0, 0, 0], 1.0, [0.0, 1.0, 0.0])
        combo = linear_combination([a, b], [2.0, -1.0])
        x = np.array([0.2, 0.0, 0.0])
        np.testing.assert_allclose(combo(x), 2.0 * a(x) - b(x), atol=1e-15)
        assert combo.smoothness == "holder" and combo.holder_alpha == 0.25

    def test_holder_alpha_required(self):
        from conicem.fields import ComplexVectorField
        with pytest.raises(ValueError):
            ComplexVectorField(lambda p: p.astype(complex), smoothness="holder")


@settings(max_examples=30, deadline=None)
@given(phi=st.floats(0.0, 2 * np.pi), tau=st.floats(0.6, 150.0),
       k=st.floats(0.3, 4.0))
def test_rho_p_property(phi, tau, k):
    d = np.array([0.0, 0.0, -1.0])
    d_perp = np.array([np.cos(phi), np.sin(phi), 0.0])
    rho, p = rho_p(CGOParams(d=d, d_perp=d_perp, tau=tau, k=k))
    assert abs(rho @ rho + k**2) <= 1e-10 * max(1.0, k**2)
    assert abs(rho @ p) <= 1e-12 * np.linalg.norm(rho) * np.linalg.norm(p)
