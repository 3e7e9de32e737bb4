"""JSON encoding of flat and structured networks.

Flat network::

    {"format": "modrelu-network", "version": 1,
     "layers": [{"A": [[[re, im], ...], ...], "b": [[re, im], ...]}, ...],
     "masks": [{"A": [[true, ...], ...], "b": [...]} | null, ...],
     "meta": {...}}

Structured network::

    {"format": "modrelu-structured", "version": 1, "root": 7,
     "nodes": [{"type": "leaf", "layers": [...], ...},
               {"type": "serial", "children": [0, 3]}, ...],
     "meta": {...}}

Complex numbers are ``[re, im]`` pairs written with 17 significant digits, so
weights survive a round trip bit for bit.  Shared sub-networks are stored once
and referenced by node index.  Leaves that carry a closed-form evaluation
(extractors, identity chains) record their parameters under ``"special"`` and
are rebuilt as the same class on load.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .network_core import AffineLayer, IdentityChain, ModReLUNetwork
from .primitives import ExtractorNetwork
from .structured import Parallel, Serial, StructuredNet, WeightedSum

__all__ = ["ParseError", "deserialize", "load", "save", "serialize"]

FLAT = "modrelu-network"
STRUCTURED = "modrelu-structured"
VERSION = 1


class ParseError(ValueError):
    """Malformed network document; ``position`` locates the problem.

    For syntax errors the position is a character offset (with line and
    column); for schema errors it is a JSON path such as ``$.layers[1].b``.
    """

    def __init__(self, message, position=None, line=None, column=None):
        self.position = position
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" at line {line} column {column} (char {position})"
        elif position is not None:
            where = f" at {position}"
        super().__init__(f"{message}{where}")


# --------------------------------------------------------------------------
# writing

def _num(x):
    s = "%.17g" % x
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _pair(c):
    return f"[{_num(c.real)},{_num(c.imag)}]"


def _vector(v):
    return "[" + ",".join(_pair(c) for c in v) + "]"


def _matrix(A):
    return "[" + ",".join(_vector(row) for row in A) + "]"


def _bools(v):
    return "[" + ",".join("true" if b else "false" for b in v) + "]"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (tuple, np.ndarray)):
        return list(obj)
    raise TypeError(f"cannot encode {type(obj).__name__} in metadata")


def _meta(meta):
    return json.dumps(meta, default=_json_default, sort_keys=True)


def _layers_json(layers):
    parts = [f'{{"A":{_matrix(layer.weights)},"b":{_vector(layer.bias)}}}' for layer in layers]
    return "[" + ",".join(parts) + "]"


def _masks_json(layers):
    if all(layer.weight_mask is None and layer.bias_mask is None for layer in layers):
        return None
    out = []
    for layer in layers:
        if layer.weight_mask is None and layer.bias_mask is None:
            out.append("null")
            continue
        wm, bm = layer.masks()
        out.append('{"A":[' + ",".join(_bools(r) for r in wm) + '],"b":' + _bools(bm) + "}")
    return "[" + ",".join(out) + "]"


def _special(net):
    if isinstance(net, ExtractorNetwork):
        return {"type": "extractor", "part": net.part, "h": net.h}
    if isinstance(net, IdentityChain):
        return {"type": "identity_chain", "radius": net.radius, "width": net.width,
                "depth": net.depth}
    return None


def _leaf_body(net):
    fields = [f'"layers":{_layers_json(net.layers)}']
    masks = _masks_json(net.layers)
    if masks is not None:
        fields.append(f'"masks":{masks}')
    special = _special(net)
    if special is not None:
        fields.append(f'"special":{json.dumps(special)}')
    if net.meta:
        fields.append(f'"meta":{_meta(net.meta)}')
    return fields


def serialize(net):
    """UTF-8 JSON bytes for a flat or structured network."""
    if isinstance(net, ModReLUNetwork):
        fields = [f'"format":"{FLAT}"', f'"version":{VERSION}'] + _leaf_body(net)
        return ("{" + ",".join(fields) + "}\n").encode("utf-8")
    if not isinstance(net, StructuredNet):
        raise TypeError(f"cannot serialize {type(net).__name__}")
    nodes, index = [], {}

    def visit(node):
        key = id(node)
        if key in index:
            return index[key]
        if isinstance(node, ModReLUNetwork):
            body = ['"type":"leaf"'] + _leaf_body(node)
        else:
            kids = [visit(c) for c in node.children]
            body = [f'"type":"{node.kind}"', f'"children":{json.dumps(kids)}']
            if isinstance(node, WeightedSum):
                body.append(f'"coeffs":{_vector(node.coeffs)}')
                body.append(f'"bias":{_pair(node.bias)}')
            if node.meta:
                body.append(f'"meta":{_meta(node.meta)}')
        index[key] = len(nodes)
        nodes.append("{" + ",".join(body) + "}")
        return index[key]

    root = visit(net)
    fields = [f'"format":"{STRUCTURED}"', f'"version":{VERSION}', f'"root":{root}',
              '"nodes":[\n' + ",\n".join(nodes) + "\n]"]
    if getattr(net, "eval_chunk", None):
        fields.append(f'"eval_chunk":{int(net.eval_chunk)}')
    return ("{" + ",".join(fields) + "}\n").encode("utf-8")


# --------------------------------------------------------------------------
# reading

def _require(obj, key, path, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"missing field {key!r}", f"{path}")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise ParseError(f"field {key!r} has the wrong type", f"{path}.{key}")
    return value


def _complex(v, path):
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v)):
        raise ParseError("expected a [re, im] pair of numbers", path)
    if not all(math.isfinite(t) for t in v):
        raise ParseError("non-finite number", path)
    return complex(float(v[0]), float(v[1]))


def _cvector(v, path):
    if not isinstance(v, list):
        raise ParseError("expected a list of [re, im] pairs", path)
    return np.array([_complex(c, f"{path}[{k}]") for k, c in enumerate(v)],
                    dtype=np.complex128)


def _cmatrix(A, path):
    if not isinstance(A, list) or not A:
        raise ParseError("expected a non-empty list of rows", path)
    rows = [_cvector(r, f"{path}[{k}]") for k, r in enumerate(A)]
    if len({len(r) for r in rows}) != 1:
        raise ParseError("rows have different lengths", path)
    return np.vstack(rows)


def _bmatrix(A, path):
    try:
        arr = np.array(A, dtype=object)
        if arr.ndim != 2 or not all(isinstance(b, bool) for b in arr.ravel()):
            raise ValueError
        return arr.astype(bool)
    except ValueError:
        raise ParseError("expected a rectangular boolean matrix", path) from None


def _bvector(v, path):
    if not isinstance(v, list) or not all(isinstance(b, bool) for b in v):
        raise ParseError("expected a list of booleans", path)
    return np.array(v, dtype=bool)


def _layers(raw, masks, path):
    if not isinstance(raw, list) or not raw:
        raise ParseError("expected a non-empty list of layers", f"{path}.layers")
    if masks is not None and (not isinstance(masks, list) or len(masks) != len(raw)):
        raise ParseError("masks must mirror the layer list", f"{path}.masks")
    layers = []
    for k, lay in enumerate(raw):
        p = f"{path}.layers[{k}]"
        A = _cmatrix(_require(lay, "A", p), f"{p}.A")
        b = _cvector(_require(lay, "b", p), f"{p}.b")
        wm = bm = None
        if masks is not None and masks[k] is not None:
            mp = f"{path}.masks[{k}]"
            wm = _bmatrix(_require(masks[k], "A", mp), f"{mp}.A")
            bm = _bvector(_require(masks[k], "b", mp), f"{mp}.b")
        try:
            layers.append(AffineLayer(A, b, wm, bm))
        except ValueError as exc:
            raise ParseError(str(exc), p) from None
    return layers


def _leaf(obj, path):
    layers = _layers(_require(obj, "layers", path), obj.get("masks"), path)
    meta = obj.get("meta") or {}
    special = obj.get("special")
    try:
        if special is None:
            return ModReLUNetwork(layers, meta=meta)
        kind = special.get("type") if isinstance(special, dict) else None
        if kind == "extractor":
            net = ExtractorNetwork(special["part"], float(special["h"]), meta=meta)
        elif kind == "identity_chain":
            net = IdentityChain(int(special["depth"]), float(special["radius"]),
                                int(special["width"]), meta=meta)
        else:
            raise ParseError(f"unknown special leaf {kind!r}", f"{path}.special")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid network: {exc}", path) from None
    if len(net.layers) != len(layers) or any(a != b for a, b in zip(net.layers, layers)):
        raise ParseError("stored weights disagree with the special leaf parameters",
                         f"{path}.special")
    return net


def _structured(doc):
    nodes_raw = _require(doc, "nodes", "$", list)
    root = _require(doc, "root", "$", int)
    built = []
    for k, obj in enumerate(nodes_raw):
        path = f"$.nodes[{k}]"
        kind = _require(obj, "type", path, str)
        if kind == "leaf":
            built.append(_leaf(obj, path))
            continue
        kids = _require(obj, "children", path, list)
        if not all(isinstance(c, int) and 0 <= c < k for c in kids):
            raise ParseError("children must reference earlier nodes", f"{path}.children")
        children = [built[c] for c in kids]
        meta = obj.get("meta") or {}
        try:
            if kind == "serial":
                node = Serial(children, meta=meta)
            elif kind == "parallel":
                node = Parallel(children, meta=meta)
            elif kind == "weighted_sum":
                coeffs = _cvector(_require(obj, "coeffs", path), f"{path}.coeffs")
                bias = _complex(_require(obj, "bias", path), f"{path}.bias")
                node = WeightedSum(children, coeffs, bias, meta=meta)
            else:
                raise ParseError(f"unknown node type {kind!r}", f"{path}.type")
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), path) from None
        built.append(node)
    if not 0 <= root < len(built):
        raise ParseError("root index out of range", "$.root")
    net = built[root]
    if isinstance(net, StructuredNet) and "eval_chunk" in doc:
        net.eval_chunk = int(doc["eval_chunk"])
    return net


def deserialize(data):
    """Network from bytes or text produced by :func:`serialize`."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("input is not UTF-8", exc.start) from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", "$")
    fmt = doc.get("format", FLAT)
    if doc.get("version", VERSION) != VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}", "$.version")
    if fmt == FLAT:
        return _leaf(doc, "$")
    if fmt == STRUCTURED:
        return _structured(doc)
    raise ParseError(f"unknown format {fmt!r}", "$.format")


def save(net, path):
    """Write atomically: a temporary file in the target directory, then rename."""
    atomic_write(path, serialize(net))


def load(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def atomic_write(path, data):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data if isinstance(data, bytes) else data.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
