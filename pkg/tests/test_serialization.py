import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modrelu_approx import primitives as P
from modrelu_approx.network_core import AffineLayer, IdentityChain, ModReLUNetwork
from modrelu_approx.serialization import ParseError, deserialize, load, save, serialize

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def probe(net, n=64, R=1.0, seed=0):
    rng = np.random.default_rng(seed)
    r = R * np.sqrt(rng.random((n, net.d_in)))
    return r * np.exp(2j * np.pi * rng.random((n, net.d_in)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=6, max_size=6))
def test_flat_round_trip_is_bit_exact(entries):
    vals = [complex(a, b) for a, b in entries]
    net = ModReLUNetwork([AffineLayer([[vals[0]], [vals[1]]], vals[2:4]),
                          AffineLayer([vals[4:6]], [0])])
    back = deserialize(serialize(net))
    for a, b in zip(net.layers, back.layers):
        assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)


@pytest.mark.parametrize("kind", P.PRIMITIVE_KINDS)
def test_primitive_round_trip(kind):
    net = P.build_from_spec(kind, R=3.0, eps=0.2, c=0.25, M=1.0)
    back = deserialize(serialize(net))
    z = probe(net)
    assert np.array_equal(net(z), back(z))
    assert back.stats() == net.stats()
    assert back.meta == net.meta


def test_special_leaves_keep_their_class():
    ex = P.build_re(2, 1e-3)
    assert isinstance(deserialize(serialize(ex)), P.ExtractorNetwork)
    chain = P.build_identity(4.0)
    assert isinstance(deserialize(serialize(chain)), IdentityChain)


def test_masks_survive():
    layer = AffineLayer([[1.0, 0.0]], [0.0], weight_mask=[[True, True]], bias_mask=[True])
    back = deserialize(serialize(ModReLUNetwork([layer])))
    wm, bm = back.layers[0].masks()
    assert wm.tolist() == [[True, True]] and bm.tolist() == [True]


def test_shared_children_stored_once():
    net = P.build_g_re(3, 0.01)
    doc = json.loads(serialize(net))
    kinds = [(n.get("special") or {}).get("type") for n in doc["nodes"] if n["type"] == "leaf"]
    assert kinds.count("extractor") == 1


def test_save_load(tmp_path):
    net = P.build_square_re(3, 0.2)
    path = tmp_path / "sq.json"
    save(net, path)
    z = probe(net, R=1.0)
    assert np.array_equal(load(path)(z), net(z))
    assert [p.name for p in tmp_path.iterdir()] == ["sq.json"]


def test_failed_save_leaves_no_file(tmp_path):
    class Bad:
        pass

    with pytest.raises(Exception):
        save(Bad(), tmp_path / "x.json")
    assert os.listdir(tmp_path) == []


@pytest.mark.parametrize("text,where", [
    ('{"format": "modrelu-network", "layers": [', "line"),
    ('[1, 2]', "$"),
    ('{"format": "other"}', "$.format"),
    ('{"format": "modrelu-network", "version": 9, "layers": []}', "$.version"),
    ('{"format": "modrelu-network", "layers": [{"A": [[[1, 0]]], "b": [[1]]}]}', "$.layers"),
    ('{"format": "modrelu-network", "layers": [{"A": [[[1, 0]]], "b": [[1, 0], [2, 0]]}]}',
     "$.layers"),
])
def test_parse_errors_locate_problem(text, where):
    with pytest.raises(ParseError) as info:
        deserialize(text)
    assert where in str(info.value)


def test_non_utf8():
    with pytest.raises(ParseError):
        deserialize(b"\xff\xfe")


def test_tampered_special_weights_rejected():
    doc = json.loads(serialize(P.build_re(2, 0.01)))
    doc["layers"][0]["b"][0][0] += 1.0
    with pytest.raises(ParseError):
        deserialize(json.dumps(doc))
