"""Network description, parameter containers, weight lifting, and the
forward pass.

A network is an ordered stack of layers over an input of width ``d``.
Convolutional layers apply ``T`` shared filters to the patches of the
previous layer; the unit for (patch p, filter t) sits at position
``h = p*T + t``. A fully connected layer is the single-patch special
case. Max-pooling takes the per-patch maximum. The output layer is fully
connected with no nonlinearity.

``lift_weights`` embeds a filter matrix into the full weight matrix that
makes the convolution an ordinary matrix product; ``lift_adjoint`` is its
transpose as a linear map, which pulls full-matrix gradients back to
filter space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import Activation, Identity
from .errors import NumericOverflowError, StructuralError, UnsupportedLayerError
from .layout import PatchLayout, full_layout


@dataclass(frozen=True)
class Conv:
    """Convolutional layer: ``filters`` shared filters over ``layout``'s
    patches of the previous layer. Output width is P * filters."""

    layout: PatchLayout
    filters: int
    activation: Activation

    def __post_init__(self):
        if self.filters < 1:
            raise StructuralError("filter count must be positive")

    def out_width(self, in_width: int) -> int:
        self._check_in_width(in_width)
        return self.layout.patch_count * self.filters

    def _check_in_width(self, in_width):
        if self.layout.width != in_width:
            raise StructuralError(
                f"layout indexes a layer of width {self.layout.width}, "
                f"but the previous layer has width {in_width}"
            )


@dataclass(frozen=True)
class FullyConnected:
    """Dense layer; equivalent to Conv with one whole-layer patch."""

    width: int
    activation: Activation

    def __post_init__(self):
        if self.width < 1:
            raise StructuralError("layer width must be positive")

    def out_width(self, in_width: int) -> int:
        return self.width


@dataclass(frozen=True)
class MaxPool:
    """Per-patch maximum; output width equals the patch count."""

    layout: PatchLayout

    def out_width(self, in_width: int) -> int:
        if self.layout.width != in_width:
            raise StructuralError(
                f"pool layout indexes width {self.layout.width}, "
                f"previous layer has width {in_width}"
            )
        return self.layout.patch_count


@dataclass(frozen=True)
class Output:
    """Final fully connected layer; applies no nonlinearity."""

    width: int

    def __post_init__(self):
        if self.width < 1:
            raise StructuralError("output width must be positive")

    def out_width(self, in_width: int) -> int:
        return self.width


Layer = Conv | FullyConnected | MaxPool | Output


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: input width plus an ordered layer stack.

    Layer numbering is 1-based in every public operation; layer 0 is the
    input. Width chaining is validated at construction. Networks used for
    training or landscape analysis additionally need an ``Output`` last
    layer (see ``ensure_feedforward_for_loss``); headless stacks are fine
    for feature-level work.
    """

    input_width: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        if self.input_width < 1:
            raise StructuralError("input width must be positive")
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise StructuralError("network needs at least one layer")
        for i, layer in enumerate(layers[:-1]):
            if isinstance(layer, Output):
                raise StructuralError(f"Output layer at position {i + 1} is not last")
        width = self.input_width
        for layer in layers:
            width = layer.out_width(width)  # raises on mismatch

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> tuple[int, ...]:
        """(n_0, n_1, ..., n_L)."""
        out = [self.input_width]
        for layer in self.layers:
            out.append(layer.out_width(out[-1]))
        return tuple(out)

    def layer(self, k: int) -> Layer:
        if not 1 <= k <= self.depth:
            raise StructuralError(f"layer index {k} outside [1, {self.depth}]")
        return self.layers[k - 1]

    def layer_layout(self, k: int) -> PatchLayout:
        """The patch layout layer ``k`` reads from layer ``k-1``.

        Fully connected and output layers read one whole-layer patch.
        """
        layer = self.layer(k)
        if isinstance(layer, (Conv, MaxPool)):
            return layer.layout
        return full_layout(self.widths[k - 1])

    @property
    def input_layout(self) -> PatchLayout:
        """Patches of the input layer, i.e. what layer 1 reads."""
        return self.layer_layout(1)

    def activation(self, k: int) -> Activation | None:
        layer = self.layer(k)
        if isinstance(layer, (Conv, FullyConnected)):
            return layer.activation
        if isinstance(layer, Output):
            return Identity()
        return None

    def is_pooling(self, k: int) -> bool:
        return isinstance(self.layer(k), MaxPool)

    def has_pooling(self, first: int = 1, last: int | None = None) -> bool:
        last = self.depth if last is None else last
        return any(self.is_pooling(k) for k in range(first, last + 1))

    def filter_shape(self, k: int) -> tuple[int, int] | None:
        """(rows, cols) of layer k's parameter matrix, or None for pooling."""
        layer = self.layer(k)
        if isinstance(layer, Conv):
            return (layer.layout.patch_size, layer.filters)
        if isinstance(layer, (FullyConnected, Output)):
            return (self.widths[k - 1], self.widths[k])
        return None

    def head(self, k: int) -> "NetworkSpec":
        """Sub-network of the first ``k`` layers."""
        self.layer(k)
        return NetworkSpec(self.input_width, self.layers[:k])


def ensure_feedforward_for_loss(spec: NetworkSpec) -> None:
    """Validate the structure required by loss-level operations: the last
    layer is Output and no other layer is missing an activation."""
    if not isinstance(spec.layers[-1], Output):
        raise StructuralError("loss-level operations require an Output last layer")


@dataclass(frozen=True)
class Params:
    """Per-layer filter matrices and bias vectors, index-aligned to the
    owning spec (entry 0 and max-pool entries are None). Entries above a
    construction's target layer may also be None for partial parameter
    sets. Arrays are read-only."""

    weights: tuple[np.ndarray | None, ...]
    biases: tuple[np.ndarray | None, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(_freeze(w) for w in self.weights))
        object.__setattr__(self, "biases", tuple(_freeze(b) for b in self.biases))
        if len(self.weights) != len(self.biases):
            raise StructuralError("weights and biases must have equal length")

    @classmethod
    def empty(cls, spec: NetworkSpec) -> "Params":
        n = spec.depth + 1
        return cls((None,) * n, (None,) * n)

    @classmethod
    def zeros(cls, spec: NetworkSpec) -> "Params":
        weights, biases = [None], [None]
        for k in range(1, spec.depth + 1):
            shape = spec.filter_shape(k)
            if shape is None:
                weights.append(None)
                biases.append(None)
            else:
                weights.append(np.zeros(shape))
                biases.append(np.zeros(spec.widths[k]))
        return cls(tuple(weights), tuple(biases))

    @classmethod
    def gaussian(
        cls,
        spec: NetworkSpec,
        rng: np.random.Generator,
        weight_scale: float = 1.0,
        bias_scale: float = 1.0,
        up_to: int | None = None,
    ) -> "Params":
        """Standard-Gaussian parameters for layers 1..up_to (default all)."""
        up_to = spec.depth if up_to is None else up_to
        weights, biases = [None], [None]
        for k in range(1, spec.depth + 1):
            shape = spec.filter_shape(k)
            if shape is None or k > up_to:
                weights.append(None)
                biases.append(None)
            else:
                weights.append(weight_scale * rng.standard_normal(shape))
                biases.append(bias_scale * rng.standard_normal(spec.widths[k]))
        return cls(tuple(weights), tuple(biases))

    @classmethod
    def fan_in_gaussian(
        cls, spec: NetworkSpec, rng: np.random.Generator, bias_scale: float = 0.01
    ) -> "Params":
        """Gaussian weights scaled by 1/sqrt(fan-in) with small Gaussian
        biases; a sensible training initialization that keeps
        pre-activations O(1) through sigmoid-style layers."""
        weights, biases = [None], [None]
        for k in range(1, spec.depth + 1):
            shape = spec.filter_shape(k)
            if shape is None:
                weights.append(None)
                biases.append(None)
            else:
                weights.append(rng.standard_normal(shape) / np.sqrt(shape[0]))
                biases.append(bias_scale * rng.standard_normal(spec.widths[k]))
        return cls(tuple(weights), tuple(biases))

    def with_layer(self, k: int, W: np.ndarray, b: np.ndarray) -> "Params":
        weights = list(self.weights)
        biases = list(self.biases)
        weights[k] = W
        biases[k] = b
        return Params(tuple(weights), tuple(biases))

    def norm(self) -> float:
        """Euclidean norm over all present parameter entries."""
        total = 0.0
        for arr in (*self.weights, *self.biases):
            if arr is not None:
                total += float(np.sum(arr * arr))
        return float(np.sqrt(total))


def _freeze(arr):
    if arr is None:
        return None
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


def validate_params(spec: NetworkSpec, params: Params, up_to: int | None = None) -> None:
    """Check shapes and finiteness of layers 1..up_to against the network."""
    up_to = spec.depth if up_to is None else up_to
    if len(params.weights) != spec.depth + 1:
        raise StructuralError(
            f"params cover {len(params.weights) - 1} layers, spec has {spec.depth}"
        )
    for k in range(1, up_to + 1):
        shape = spec.filter_shape(k)
        W, b = params.weights[k], params.biases[k]
        if shape is None:
            if W is not None or b is not None:
                raise StructuralError(f"layer {k} is max-pool but has parameters")
            continue
        if W is None or b is None:
            raise StructuralError(f"layer {k} is missing parameters")
        if W.shape != shape:
            raise StructuralError(f"layer {k} weights {W.shape}, expected {shape}")
        if b.shape != (spec.widths[k],):
            raise StructuralError(
                f"layer {k} bias {b.shape}, expected ({spec.widths[k]},)"
            )
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise StructuralError(f"layer {k} parameters contain non-finite values")


@dataclass(frozen=True)
class ForwardTrace:
    """Per-layer feature matrices for one batch.

    ``F[k]`` are post-activations (``F[0]`` is the input), ``G[k]`` the
    pre-activations; ``G`` is None at index 0 and at max-pool layers.
    """

    F: tuple[np.ndarray, ...]
    G: tuple[np.ndarray | None, ...]

    def __post_init__(self):
        object.__setattr__(self, "F", tuple(_freeze(a) for a in self.F))
        object.__setattr__(self, "G", tuple(_freeze(a) for a in self.G))

    @property
    def output(self) -> np.ndarray:
        return self.F[-1]

    @property
    def last_layer(self) -> int:
        return len(self.F) - 1


@dataclass(frozen=True)
class Dataset:
    """Training inputs X (N x d) and targets Y (N x m), optionally with
    integer class labels and a full-rank class embedding Z (m x m) whose
    row j is the target for every sample of class j."""

    X: np.ndarray
    Y: np.ndarray
    labels: tuple[int, ...] | None = None
    Z: np.ndarray | None = None

    def __post_init__(self):
        X = _freeze(self.X)
        Y = _freeze(self.Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if X.ndim != 2 or Y.ndim != 2:
            raise StructuralError("X and Y must be matrices")
        if X.shape[0] != Y.shape[0]:
            raise StructuralError(
                f"X has {X.shape[0]} rows but Y has {Y.shape[0]}"
            )
        if self.labels is not None:
            labels = tuple(int(c) for c in self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != X.shape[0]:
                raise StructuralError("one label per sample required")
        if self.Z is not None:
            Z = _freeze(self.Z)
            object.__setattr__(self, "Z", Z)
            m = Y.shape[1]
            if Z.shape != (m, m):
                raise StructuralError(f"Z must be ({m}, {m}), got {Z.shape}")
            if np.linalg.matrix_rank(Z) != m:
                raise StructuralError("class embedding Z must have full rank")
            if self.labels is not None:
                for i, c in enumerate(self.labels):
                    if not 0 <= c < m:
                        raise StructuralError(f"label {c} outside [0, {m})")
                    if not np.array_equal(Y[i], Z[c]):
                        raise StructuralError(
                            f"row {i} of Y does not equal embedding row {c}"
                        )

    @property
    def sample_count(self) -> int:
        return self.X.shape[0]

    @property
    def input_width(self) -> int:
        return self.X.shape[1]

    @property
    def class_count(self) -> int:
        return self.Y.shape[1]


def lift_weights(spec: NetworkSpec, k: int, W: np.ndarray) -> np.ndarray:
    """Embed filter matrix W of layer k into the full weight matrix U.

    Column ``h = p*T + t`` of U carries filter t's entries at the index
    positions of patch p and zeros elsewhere, so that
    ``G_k = F_{k-1} @ U + b`` reproduces the per-patch definition. For a
    fully connected layer U is W itself. The map is linear in W.
    """
    layer = spec.layer(k)
    if isinstance(layer, MaxPool):
        raise UnsupportedLayerError(f"layer {k} is max-pool and has no weights")
    shape = spec.filter_shape(k)
    W = np.asarray(W, dtype=np.float64)
    if W.shape != shape:
        raise StructuralError(f"layer {k} weights {W.shape}, expected {shape}")
    if isinstance(layer, (FullyConnected, Output)):
        return W.copy()
    T = layer.filters
    idx = layer.layout.index_array()  # (P, l)
    U = np.zeros((spec.widths[k - 1], layer.layout.patch_count * T))
    for p in range(idx.shape[0]):
        U[idx[p], p * T : (p + 1) * T] = W
    return U


def lift_adjoint(spec: NetworkSpec, k: int, V: np.ndarray) -> np.ndarray:
    """Adjoint of ``lift_weights`` in the Frobenius inner product:
    ``<lift(W), V> == <W, lift_adjoint(V)>`` for all W. Sums V's entries
    over every (patch, filter) placement of each filter tap; this is the
    chain rule that pulls a full-matrix gradient back to filter space.
    """
    layer = spec.layer(k)
    if isinstance(layer, MaxPool):
        raise UnsupportedLayerError(f"layer {k} is max-pool and has no weights")
    V = np.asarray(V, dtype=np.float64)
    expected = (spec.widths[k - 1], spec.widths[k])
    if V.shape != expected:
        raise StructuralError(f"layer {k} lifted matrix {V.shape}, expected {expected}")
    if isinstance(layer, (FullyConnected, Output)):
        return V.copy()
    T = layer.filters
    idx = layer.layout.index_array()
    A = np.zeros((layer.layout.patch_size, T))
    for p in range(idx.shape[0]):
        A += V[idx[p], p * T : (p + 1) * T]
    return A


def forward(
    spec: NetworkSpec,
    params: Params,
    X: np.ndarray,
    up_to: int | None = None,
) -> ForwardTrace:
    """Evaluate layers 1..up_to (default: all) on a batch.

    Convolutional layers are computed by gathering patches and multiplying
    by the filter matrix, which equals the lifted-matrix product
    ``F_{k-1} @ lift_weights(W_k) + b_k`` up to floating-point rounding.
    Pure function: identical inputs give identical traces.
    """
    up_to = spec.depth if up_to is None else up_to
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.input_width:
        raise StructuralError(
            f"X must be (N, {spec.input_width}), got {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise StructuralError("X contains non-finite values")
    validate_params(spec, params, up_to=up_to)

    F: list[np.ndarray] = [X]
    G: list[np.ndarray | None] = [None]
    for k in range(1, up_to + 1):
        layer = spec.layer(k)
        prev = F[k - 1]
        # overflow surfaces as NumericOverflowError below, not a warning
        with np.errstate(over="ignore", invalid="ignore"):
            if isinstance(layer, MaxPool):
                Fk = layer.layout.extract(prev).max(axis=2)
                Gk = None
            else:
                W, b = params.weights[k], params.biases[k]
                if isinstance(layer, Conv):
                    patches = layer.layout.extract(prev)  # (N, P, l)
                    Gk = np.tensordot(patches, W, axes=([2], [0]))  # (N, P, T)
                    Gk = Gk.reshape(prev.shape[0], -1) + b
                else:
                    Gk = prev @ W + b
                sigma = spec.activation(k)
                Fk = Gk if isinstance(sigma, Identity) else sigma(Gk)
        if Gk is not None and not np.all(np.isfinite(Gk)):
            raise NumericOverflowError(f"non-finite pre-activation at layer {k}")
        if not np.all(np.isfinite(Fk)):
            raise NumericOverflowError(f"non-finite activation at layer {k}")
        F.append(Fk)
        G.append(Gk)
    return ForwardTrace(tuple(F), tuple(G))
