import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modrelu_approx import primitives as P
from modrelu_approx.highprec import evaluate_mp
from modrelu_approx.network_core import ParameterError
from modrelu_approx.structured import flatten


def disk(R, n, seed=0):
    rng = np.random.default_rng(seed)
    r = R * np.sqrt(rng.random(n))
    return (r * np.exp(2j * np.pi * rng.random(n)))[:, None]


def boundary(R, n=512):
    return (R * np.exp(2j * np.pi * np.arange(n) / n))[:, None]


def mp_re_h(z, h):
    """``(sgn(h z - i/h) + i) / h**2`` straight from the definition, 60 digits."""
    with mpmath.workdps(60):
        z, h = mpmath.mpc(z), mpmath.mpf(h)
        u = h * z - 1j / h
        return complex((u / abs(u) + 1j) / h**2)


def mp_im_h(z, h):
    with mpmath.workdps(60):
        z, h = mpmath.mpc(z), mpmath.mpf(h)
        u = h * z + 1 / h
        return complex(-1j * (u / abs(u) - 1) / h**2)


class TestReferences:
    @given(st.floats(-30, 30), st.floats(-30, 30), st.sampled_from([0.01, 0.001, 1e-5]))
    def test_stable_re_h_matches_definition(self, x, y, h):
        z = complex(x, y)
        assert abs(P.ref_re_h(z, h) - mp_re_h(z, h)) <= 1e-12 * (1 + abs(z))

    @given(st.floats(-30, 30), st.floats(-30, 30), st.sampled_from([0.01, 0.001, 1e-5]))
    def test_stable_im_h_matches_definition(self, x, y, h):
        z = complex(x, y)
        assert abs(P.ref_im_h(z, h) - mp_im_h(z, h)) <= 1e-12 * (1 + abs(z))

    @pytest.mark.parametrize("m", range(7))
    def test_f_m_interpolates_square_at_dyadic_nodes(self, m):
        x = np.arange(2**m + 1) / 2**m
        np.testing.assert_allclose(P.ref_f_m(m, x), x * x, atol=1e-15)

    def test_tent_map(self):
        np.testing.assert_allclose(P.ref_g([-1, 0, 0.25, 0.5, 0.75, 1, 2]),
                                   [0, 0, 0.5, 1, 0.5, 0, 0])

    def test_psi(self):
        np.testing.assert_allclose(P.ref_psi([-2, -1, 0, 0.5, 1, 1.5]),
                                   [0, 0.5, 1, 1, 0.5, 0])

    @pytest.mark.parametrize("eps,m", [(0.25, 0), (0.2, 1), (1 / 16, 1), (0.01, 3), (1e-4, 6)])
    def test_sawtooth_count(self, eps, m):
        assert P.sawtooth_count(eps) == m
        assert 2.0 ** (-2 * m - 2) <= eps


class TestExtractors:
    @pytest.mark.parametrize("part", ["re", "im"])
    @pytest.mark.parametrize("eps", [0.1, 0.01, 0.001])
    def test_accuracy_and_size(self, part, eps):
        net = P.build_re(2, eps) if part == "re" else P.build_im(2, eps)
        z = np.concatenate([disk(2, 5000), boundary(2)])
        target = z.real if part == "re" else z.imag
        assert np.max(np.abs(net(z) - target)) <= eps
        s = net.stats()
        assert (s.hidden_neurons, s.weight_count, s.depth) == (3, 10, 2)

    @pytest.mark.parametrize("part", ["re", "im"])
    def test_closed_form_against_exact_weights(self, part):
        net = P.build_re(4, 1e-4) if part == "re" else P.build_im(4, 1e-4)
        for z in disk(4, 40, seed=3)[:, 0]:
            exact = complex(evaluate_mp(net, [z], dps=80)[0])
            assert abs(net(np.array([[z]]))[0, 0] - exact) <= 1e-13

    def test_raw_layers_lose_precision(self):
        # The rounded float64 matrices cancel catastrophically for small h;
        # this is why evaluation uses the closed form.
        net = P.build_re(2, 1e-4)
        z = disk(2, 200)
        raw = np.max(np.abs(net.forward_layers(z) - z.real))
        closed = np.max(np.abs(net(z) - z.real))
        assert closed < 1e-3 * raw

    @pytest.mark.parametrize("h", [0.1, 0.01])
    def test_raw_layers_match_closed_form_for_moderate_h(self, h):
        net = P.ExtractorNetwork("im", h)
        z = disk(1 / (2 * h) - 1, 300)
        np.testing.assert_allclose(net.forward_layers(z), net(z), atol=1e-6 / h**2)

    def test_weight_bound(self):
        net = P.build_re(2, 0.01)
        assert net.stats().max_weight_magnitude <= P.extractor_weight_bound(net.h)

    @pytest.mark.parametrize("R,eps", [(0.5, 0.1), (2, 0), (2, 1.5)])
    def test_rejects_bad_parameters(self, R, eps):
        with pytest.raises(ParameterError):
            P.build_re(R, eps)


class TestReLU:
    @pytest.mark.parametrize("c", [0.0, -0.5, 1.0, -2.0])
    def test_shifted_relu(self, c):
        net = P.build_relu_re(3, c, 0.01)
        z = np.concatenate([disk(3, 4000), boundary(3)])
        assert np.max(np.abs(net(z)[:, 0] - np.maximum(z[:, 0].real + c, 0))) <= 0.01
        assert net.stats().depth == 3

    def test_relu_im(self):
        net = P.build_relu_im(2, 0.25, 0.01)
        z = disk(2, 3000)
        assert np.max(np.abs(net(z)[:, 0] - np.maximum(z[:, 0].imag + 0.25, 0))) <= 0.01

    def test_relu_weight_count(self):
        assert P.build_relu_re(2, 0.0, 0.01).stats().weight_count == 11

    def test_abs(self):
        net = P.build_abs_re(3, 0.01)
        z = disk(3, 4000)
        assert np.max(np.abs(net(z)[:, 0] - np.abs(z[:, 0].real))) <= 0.02
        assert net.stats().weight_count == 22

    def test_tent(self):
        net = P.build_g_re(3, 0.001)
        z = disk(3, 4000)
        assert np.max(np.abs(net(z)[:, 0] - P.ref_g(z[:, 0].real))) <= 0.008

    def test_structured_stats_equal_flattened(self):
        net = P.build_g_re(3, 0.01)
        flat = flatten(net)
        assert flat.stats() == net.stats()
        z = disk(3, 200)
        # Raw layers carry rounding of order eps_mach / h**3 with h ~ 1e-3.
        np.testing.assert_allclose(flat.forward_layers(z), net(z), atol=1e-5)


class TestSquareAndProduct:
    def test_square_on_certified_domain(self):
        net = P.build_square_re(3, 0.2)
        z = disk(3, 20000)[:, 0]
        z = z[np.abs(z.real) <= 1][:, None]
        assert np.max(np.abs(net(z)[:, 0] - z[:, 0].real ** 2)) <= 0.2
        assert net.stats().depth == P.square_depth(net.meta["m"]) == 9

    def test_square_im(self):
        net = P.build_square_im(3, 0.1)
        z = disk(3, 20000)[:, 0]
        z = z[np.abs(z.imag) <= 1][:, None]
        assert np.max(np.abs(net(z)[:, 0] - z[:, 0].imag ** 2)) <= 0.1

    def test_square_against_high_precision(self):
        net = P.build_square_re(3, 0.2)
        for z in (0.4 + 1.5j, -0.9 - 2.5j, 1.0 + 0j, 0j):
            exact = complex(evaluate_mp(net, [z], dps=50)[0])
            assert abs(net(np.array([[z]]))[0, 0] - exact) <= 1e-9

    @pytest.mark.parametrize("eps", [0.3, 0.1, 0.02])
    def test_square_depth_grows_logarithmically(self, eps):
        net = P.build_square_re(3, eps)
        m = net.meta["m"]
        assert 2.0 ** (-2 * m - 2) <= eps / 18
        assert net.stats().depth <= 2 * m + 5

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
    def test_product_property(self, a, b, c, d):
        net = _product()
        z, w = complex(a, b), complex(c, d)
        if abs(z) > 3 or abs(w) > 3:
            return
        assert abs(net(np.array([[z, w]]))[0, 0] - z * w) <= 0.1

    def test_product_re(self):
        net = P.build_product_re(3, 1, 0.05)
        z = disk(1, 3000, seed=4)
        w = disk(1, 3000, seed=5)
        out = net(np.hstack([z, w]))[:, 0]
        assert np.max(np.abs(out - z[:, 0].real * w[:, 0].real)) <= 0.05

    @pytest.mark.parametrize("kwargs", [dict(R=2, M=1, eps_target=0.1),
                                        dict(R=3, M=0.5, eps_target=0.1),
                                        dict(R=3, M=1, eps_target=0.4)])
    def test_product_rejects(self, kwargs):
        with pytest.raises(ParameterError):
            P.build_product(**kwargs)


_PRODUCT = []


def _product():
    if not _PRODUCT:
        _PRODUCT.append(P.build_product(3, 1, 0.1))
    return _PRODUCT[0]


class TestBumps:
    def test_psi_re(self):
        x = np.linspace(-3, 3, 601)
        np.testing.assert_allclose(P.build_psi_re()(x[:, None])[:, 0], P.ref_psi(x), atol=1e-15)

    def test_psi_im(self):
        y = np.linspace(-3, 3, 601)
        out = P.build_psi_im()((1j * y)[:, None])[:, 0]
        np.testing.assert_allclose(out, 1j * P.ref_psi(y), atol=1e-15)


@pytest.mark.parametrize("kind", P.PRIMITIVE_KINDS)
def test_build_from_spec_records_kind(kind):
    net = P.build_from_spec(kind, R=3.0, eps=0.2, c=0.0, M=1.0)
    assert net.meta["kind"] == kind


def test_build_from_spec_unknown():
    with pytest.raises(ParameterError):
        P.build_from_spec("cube")
