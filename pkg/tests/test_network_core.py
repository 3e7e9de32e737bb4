import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modrelu_approx.highprec import evaluate_mp
from modrelu_approx.network_core import (
    AffineLayer,
    DepthMismatchError,
    DimensionError,
    ModReLUNetwork,
    ParameterError,
    compose,
    identity_chain,
    identity_network,
    linear_network,
    modrelu,
    pad_depth,
    parallel,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


def naive_modrelu(z):
    r = abs(z)
    return 0j if r <= 1 else (r - 1) * z / r


def random_net(rng, widths):
    layers = []
    for a, b in zip(widths[:-1], widths[1:]):
        A = rng.standard_normal((b, a)) + 1j * rng.standard_normal((b, a))
        layers.append(AffineLayer(A, rng.standard_normal(b) + 1j * rng.standard_normal(b)))
    return ModReLUNetwork(layers)


def naive_forward(net, z):
    x = np.asarray(z, dtype=complex)
    for k, layer in enumerate(net.layers):
        x = layer.weights @ x + layer.bias
        if k < net.depth - 1:
            x = np.array([naive_modrelu(v) for v in x])
    return x


class TestModReLU:
    @given(complexes)
    def test_matches_definition(self, z):
        assert abs(modrelu(z) - naive_modrelu(z)) <= 1e-12 * (1 + abs(z))

    @pytest.mark.parametrize("z", [0, 0.5, 1, 1j, -1, np.exp(0.3j)])
    def test_zero_on_closed_unit_disk(self, z):
        assert modrelu(z) == 0

    @given(complexes)
    def test_phase_preserving(self, z):
        out = modrelu(z)
        if abs(z) > 1 + 1e-9:
            assert abs(out * abs(z) - (abs(z) - 1) * z) <= 1e-10 * abs(z) ** 2

    @given(complexes, complexes)
    def test_one_lipschitz(self, z, w):
        assert abs(modrelu(z) - modrelu(w)) <= abs(z - w) + 1e-12

    def test_array_shape_and_dtype(self):
        z = np.arange(12).reshape(3, 4) * (0.3 + 0.4j)
        out = modrelu(z)
        assert out.shape == (3, 4) and out.dtype == np.complex128


class TestAffineLayer:
    def test_rejects_bad_bias(self):
        with pytest.raises(DimensionError):
            AffineLayer(np.ones((2, 3)), np.ones(3))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            AffineLayer([[np.inf]])

    def test_mask_must_cover_nonzeros(self):
        with pytest.raises(ValueError):
            AffineLayer([[1.0, 2.0]], weight_mask=[[True, False]])

    def test_weights_are_readonly(self):
        layer = AffineLayer([[1.0]])
        with pytest.raises(ValueError):
            layer.weights[0, 0] = 2

    def test_then_is_composition(self):
        rng = np.random.default_rng(0)
        a = AffineLayer(rng.standard_normal((3, 2)), rng.standard_normal(3))
        b = AffineLayer(rng.standard_normal((4, 3)), rng.standard_normal(4))
        x = rng.standard_normal((5, 2)) + 0j
        np.testing.assert_allclose(a.then(b).apply(x.copy()), b.apply(a.apply(x.copy())))


class TestNetwork:
    @pytest.mark.parametrize("widths", [[1, 1], [2, 3, 1], [3, 5, 4, 2], [1, 7, 7, 7, 1]])
    def test_forward_matches_naive(self, widths):
        rng = np.random.default_rng(len(widths))
        net = random_net(rng, widths)
        x = rng.standard_normal((6, widths[0])) * 3 + 1j * rng.standard_normal((6, widths[0]))
        ref = np.array([naive_forward(net, row) for row in x])
        np.testing.assert_allclose(net(x), ref, rtol=1e-12, atol=1e-12)

    def test_single_vector_input(self):
        net = random_net(np.random.default_rng(1), [2, 3, 1])
        assert net([1, 2j]).shape == (1,)

    def test_dimension_mismatch(self):
        net = random_net(np.random.default_rng(1), [2, 3, 1])
        with pytest.raises(DimensionError):
            net(np.zeros((4, 3)))

    def test_layer_chain_mismatch(self):
        with pytest.raises(DimensionError):
            ModReLUNetwork([AffineLayer(np.ones((2, 1))), AffineLayer(np.ones((1, 3)))])

    def test_stats_counts(self):
        net = ModReLUNetwork([AffineLayer([[1.0], [0.0]], [1.0, 0.0]),
                              AffineLayer([[2.0, -3.0]], [0.0])])
        s = net.stats()
        assert s.depth == 2
        assert s.neuron_counts == (1, 2, 1)
        assert s.weight_count == 4
        assert s.max_weight_magnitude == 3.0
        assert s.hidden_neurons == 2

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_compose_realizes_composition(self, seed):
        rng = np.random.default_rng(seed)
        inner = random_net(rng, [2, 3, 2])
        outer = random_net(rng, [2, 4, 1])
        x = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        np.testing.assert_allclose(compose(outer, inner)(x), outer(inner(x)),
                                   rtol=1e-9, atol=1e-9)
        assert compose(outer, inner).depth == inner.depth + outer.depth - 1

    def test_parallel(self):
        rng = np.random.default_rng(3)
        a, b = random_net(rng, [1, 2, 1]), random_net(rng, [2, 3, 2])
        both = parallel([a, b])
        x = rng.standard_normal((5, 3)) + 0j
        np.testing.assert_allclose(both(x), np.hstack([a(x[:, :1]), b(x[:, 1:])]))

    def test_parallel_requires_equal_depth(self):
        rng = np.random.default_rng(3)
        with pytest.raises(DepthMismatchError):
            parallel([random_net(rng, [1, 1]), random_net(rng, [1, 2, 1])])

    def test_linear_network(self):
        net = linear_network([[1, 2j]], [3])
        assert net([1, 1])[0] == 4 + 2j


class TestIdentity:
    @pytest.mark.parametrize("R", [1.0, 10.0, 100.0])
    def test_exact_on_disk(self, R):
        rng = np.random.default_rng(0)
        r = R * np.sqrt(rng.random(2000))
        z = (r * np.exp(2j * np.pi * rng.random(2000)))[:, None]
        net = identity_network(R)
        np.testing.assert_allclose(net.forward_layers(z), z, atol=1e-12 * R, rtol=0)
        np.testing.assert_array_equal(net(z), z)
        assert net.stats().weight_count == 7 and net.stats().hidden_neurons == 2

    @pytest.mark.parametrize("depth,width", [(1, 1), (2, 1), (4, 2), (7, 3)])
    def test_chain_closed_form_matches_layers(self, depth, width):
        rng = np.random.default_rng(depth)
        z = 3 * (rng.random((50, width)) - 0.5) + 3j * (rng.random((50, width)) - 0.5)
        chain = identity_chain(depth, 3.0, width)
        assert chain.depth == depth
        np.testing.assert_allclose(chain.forward_layers(z), chain(z), atol=1e-12)

    def test_chain_against_high_precision(self):
        chain = identity_chain(4, 5.0, 2)
        for z in ([1 + 1j, -2], [4.9j, -5], [0, 0]):
            exact = evaluate_mp(chain, z)
            np.testing.assert_allclose([complex(v) for v in exact], z, atol=1e-30)

    def test_outside_disk_falls_back_to_layers(self):
        net = identity_network(1.0)
        z = np.array([[-1.5 + 0j]])  # |z + R + 1| < 1
        np.testing.assert_allclose(net(z), net.forward_layers(z))
        assert net(z)[0, 0] != z[0, 0]

    def test_bad_radius(self):
        with pytest.raises(ParameterError):
            identity_network(0)

    def test_pad_depth(self):
        net = random_net(np.random.default_rng(4), [1, 2, 1])
        padded = pad_depth(net, 5, 100.0)
        assert padded.depth == 5
        x = np.array([[0.3 + 0.1j], [-1j]])
        np.testing.assert_allclose(padded(x), net(x), atol=1e-10)
        with pytest.raises(ValueError):
            pad_depth(net, 1, 1.0)
