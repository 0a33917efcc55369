"""Network description files: JSON documents with explicit patch lists.

Schema (all keys required unless noted, no others allowed):

    {
      "input_width": <int>,
      "layers": [
        {"kind": "conv", "filters": <int>, "activation": <act>,
         "patches": [[<int>, ...], ...]},
        {"kind": "fully_connected", "width": <int>, "activation": <act>},
        {"kind": "max_pool", "patches": [[<int>, ...], ...]},
        {"kind": "output", "width": <int>}
      ]
    }

where ``<act>`` is ``{"kind": "sigmoid" | "relu" | "identity"}`` or
``{"kind": "softplus", "alpha": <float>}``. Patch indices are 0-based
into the previous layer; the enclosing width is implied by the chain.
Round-trips are lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

from .activations import activation_from_dict
from .errors import FormatError
from .layout import PatchLayout
from .network import Conv, FullyConnected, MaxPool, NetworkSpec, Output


def _require_keys(obj: dict, required: set[str], optional: set[str], where: str):
    keys = set(obj)
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise FormatError(f"{where}: missing keys {sorted(missing)}")
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")


def _activation(obj, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: activation must be an object")
    _require_keys(obj, {"kind"}, {"alpha"}, where)
    try:
        return activation_from_dict(obj)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def spec_to_dict(spec: NetworkSpec) -> dict:
    layers = []
    for layer in spec.layers:
        if isinstance(layer, Conv):
            layers.append(
                {
                    "kind": "conv",
                    "filters": layer.filters,
                    "activation": layer.activation.to_dict(),
                    "patches": [list(p) for p in layer.layout.patches],
                }
            )
        elif isinstance(layer, FullyConnected):
            layers.append(
                {
                    "kind": "fully_connected",
                    "width": layer.width,
                    "activation": layer.activation.to_dict(),
                }
            )
        elif isinstance(layer, MaxPool):
            layers.append(
                {"kind": "max_pool", "patches": [list(p) for p in layer.layout.patches]}
            )
        else:
            layers.append({"kind": "output", "width": layer.width})
    return {"input_width": spec.input_width, "layers": layers}


def spec_from_dict(doc: dict) -> NetworkSpec:
    if not isinstance(doc, dict):
        raise FormatError("network document must be an object")
    _require_keys(doc, {"input_width", "layers"}, set(), "network")
    width = doc["input_width"]
    if not isinstance(width, int) or width < 1:
        raise FormatError("input_width must be a positive integer")
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise FormatError("layers must be a non-empty list")
    layers = []
    for i, entry in enumerate(doc["layers"], start=1):
        where = f"layer {i}"
        if not isinstance(entry, dict):
            raise FormatError(f"{where}: must be an object")
        kind = entry.get("kind")
        if kind == "conv":
            _require_keys(entry, {"kind", "filters", "activation", "patches"},
                          set(), where)
            layout = _layout(entry["patches"], width, where)
            layer = Conv(layout, entry["filters"], _activation(entry["activation"], where))
        elif kind == "fully_connected":
            _require_keys(entry, {"kind", "width", "activation"}, set(), where)
            layer = FullyConnected(entry["width"], _activation(entry["activation"], where))
        elif kind == "max_pool":
            _require_keys(entry, {"kind", "patches"}, set(), where)
            layer = MaxPool(_layout(entry["patches"], width, where))
        elif kind == "output":
            _require_keys(entry, {"kind", "width"}, set(), where)
            layer = Output(entry["width"])
        else:
            raise FormatError(f"{where}: unknown layer kind {kind!r}")
        width = layer.out_width(width)
        layers.append(layer)
    return NetworkSpec(doc["input_width"], tuple(layers))


def _layout(patches, width: int, where: str) -> PatchLayout:
    if not isinstance(patches, list):
        raise FormatError(f"{where}: patches must be a list of index lists")
    return PatchLayout(width, tuple(tuple(p) for p in patches))


def save_netspec(spec: NetworkSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")


def load_netspec(path) -> NetworkSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return spec_from_dict(doc)
