"""Feed-forward network representation, serialization, baselines and local bounds.

Networks are stacks of sparse weight matrices with a smooth activation whose
derivative lives in [0, 1] (ELU or softplus). The final layer has a single
output row; biases are not supported by the JSON format. All objects are
treated as immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class NetworkFormatError(ValueError):
    """Malformed network JSON: bad structure, duplicate or zero entries."""


class DimensionMismatchError(ValueError):
    """Layer shapes do not chain, or an input vector has the wrong length."""


class PruningError(ValueError):
    """Pruning removed every input-to-output path."""


class ActivationKind(Enum):
    ELU = "elu"
    SOFTPLUS = "softplus"

    @classmethod
    def from_name(cls, name: str) -> "ActivationKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise NetworkFormatError(f"unknown activation {name!r}") from None

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if self is ActivationKind.ELU:
            return np.where(x >= 0.0, x, np.expm1(x))
        return np.logaddexp(0.0, x)  # softplus

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self is ActivationKind.ELU:
            return np.minimum(1.0, np.exp(np.minimum(x, 0.0)))
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-x))  # sigmoid


class WeightMatrix:
    """Sparse weight matrix stored densely; only nonzero entries are 'present'."""

    __slots__ = ("rows", "cols", "dense")

    def __init__(self, dense: np.ndarray):
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 2 or dense.shape[0] < 1 or dense.shape[1] < 1:
            raise DimensionMismatchError(f"weight matrix must be 2-D, got shape {dense.shape}")
        self.rows, self.cols = dense.shape
        self.dense = dense.copy()
        self.dense.setflags(write=False)

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries) -> "WeightMatrix":
        if rows < 1 or cols < 1:
            raise DimensionMismatchError("matrix dimensions must be positive")
        dense = np.zeros((rows, cols))
        seen: set[tuple[int, int]] = set()
        for r, c, v in entries:
            if r != int(r) or c != int(c):
                raise NetworkFormatError(f"non-integer index in entry ({r}, {c}, {v})")
            r, c = int(r), int(c)
            if not (0 <= r < rows and 0 <= c < cols):
                raise NetworkFormatError(f"entry ({r}, {c}) out of range for {rows}x{cols}")
            if (r, c) in seen:
                raise NetworkFormatError(f"duplicate entry at ({r}, {c})")
            v = float(v)
            if v == 0.0:
                raise NetworkFormatError(f"explicit zero weight at ({r}, {c})")
            seen.add((r, c))
            dense[r, c] = v
        return cls(dense)

    def entries(self) -> list[tuple[int, int, float]]:
        rs, cs = np.nonzero(self.dense)
        return [(int(r), int(c), float(self.dense[r, c])) for r, c in zip(rs, cs)]

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.dense))

    def linf_norm(self) -> float:
        return float(np.max(np.sum(np.abs(self.dense), axis=1)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return self.dense.shape == other.dense.shape and np.array_equal(self.dense, other.dense)

    def __repr__(self) -> str:
        return f"WeightMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


def layer_norm_linf(w: WeightMatrix) -> float:
    """Operator norm of w as a map (R^cols, l-inf) -> (R^rows, l-inf): max row l1."""
    return w.linf_norm()


class Network:
    """Weight matrices plus an activation; scalar output, depth >= 2."""

    __slots__ = ("layers", "activation")

    def __init__(self, layers, activation: ActivationKind):
        layers = tuple(layers)
        if len(layers) < 2:
            raise DimensionMismatchError("network needs at least two weight matrices")
        for i in range(len(layers) - 1):
            if layers[i + 1].cols != layers[i].rows:
                raise DimensionMismatchError(
                    f"layer {i + 1} has {layers[i + 1].cols} columns but layer {i} "
                    f"has {layers[i].rows} rows"
                )
        if layers[-1].rows != 1:
            raise DimensionMismatchError("final layer must have exactly one output row")
        self.layers = layers
        self.activation = activation

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_size(self) -> int:
        return self.layers[0].cols

    @property
    def variable_widths(self) -> tuple[int, ...]:
        """Sizes of the variable layers: input, then each hidden layer."""
        return (self.layers[0].cols,) + tuple(w.rows for w in self.layers[:-1])

    @property
    def num_variables(self) -> int:
        return sum(self.variable_widths)

    def forward(self, x) -> tuple[float, list[np.ndarray]]:
        """Evaluate the network; returns (output, hidden preactivations)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_size,):
            raise DimensionMismatchError(f"input must have length {self.input_size}")
        pre = []
        a = x
        for w in self.layers[:-1]:
            z = w.dense @ a
            pre.append(z)
            a = self.activation.apply(z)
        out = float((self.layers[-1].dense @ a)[0])
        return out, pre

    def gradient(self, x) -> np.ndarray:
        """Gradient of the scalar output with respect to the input."""
        _, pre = self.forward(x)
        v = self.layers[-1].dense[0].copy()
        for i in range(self.depth - 1, 0, -1):
            v = self.activation.derivative(pre[i - 1]) * v
            v = self.layers[i - 1].dense.T @ v
        return v

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.activation is other.activation and self.layers == other.layers

    def __repr__(self) -> str:
        shape = "-".join(str(s) for s in self.variable_widths) + "-1"
        return f"Network({shape}, {self.activation.value})"


def _format_weight(v: float) -> str:
    # 17 significant digits round-trip any double exactly.
    return format(v, ".17g")


def save_network(net: Network) -> bytes:
    """Canonical JSON bytes: entries sorted by (layer, row, col), 17-digit floats."""
    parts = [f'{{"activation":"{net.activation.value}","layers":[']
    layer_blobs = []
    for w in net.layers:
        entry_blobs = ",".join(
            f"[{r},{c},{_format_weight(v)}]" for r, c, v in sorted(w.entries())
        )
        layer_blobs.append(f'{{"rows":{w.rows},"cols":{w.cols},"entries":[{entry_blobs}]}}')
    parts.append(",".join(layer_blobs))
    parts.append("]}")
    return "".join(parts).encode("ascii")


def load_network(source, output_row: int | None = None) -> Network:
    """Parse network JSON.

    `source` may be bytes, str, or a readable file object. For files whose
    final layer has several output rows, `output_row` selects the row to keep
    (the stored network must end in a single scalar output).
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        data = json.loads(source)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict) or "activation" not in data or "layers" not in data:
        raise NetworkFormatError('network JSON needs "activation" and "layers" keys')
    activation = ActivationKind.from_name(str(data["activation"]))
    raw_layers = data["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise NetworkFormatError('"layers" must be a nonempty list')

    matrices = []
    for i, raw in enumerate(raw_layers):
        if not isinstance(raw, dict) or not {"rows", "cols", "entries"} <= set(raw):
            raise NetworkFormatError(f'layer {i} needs "rows", "cols" and "entries"')
        try:
            matrices.append(WeightMatrix.from_entries(raw["rows"], raw["cols"], raw["entries"]))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, (NetworkFormatError, DimensionMismatchError)):
                raise
            raise NetworkFormatError(f"layer {i}: {exc}") from None

    last = matrices[-1]
    if last.rows > 1:
        if output_row is None:
            raise DimensionMismatchError(
                f"final layer has {last.rows} output rows; pass output_row to select one"
            )
        if not 0 <= output_row < last.rows:
            raise DimensionMismatchError(f"output_row {output_row} out of range")
        matrices[-1] = WeightMatrix(last.dense[output_row : output_row + 1])
    return Network(matrices, activation)


def random_network(widths, sparsity: int, seed: int) -> Network:
    """Random network: per-neuron fan-in exactly `sparsity`, weights uniform
    in [-1/sqrt(n_i), 1/sqrt(n_i)] where n_i is the source-layer width.

    `widths` lists every layer size including the final output, which must
    be 1. Connected source indices are drawn uniformly without replacement;
    the construction is deterministic per seed.
    """
    widths = [int(w) for w in widths]
    if len(widths) < 3:
        raise DimensionMismatchError("need input, at least one hidden layer, and output widths")
    if widths[-1] != 1:
        raise DimensionMismatchError("final width must be 1 (scalar output)")
    if any(w < 1 for w in widths):
        raise DimensionMismatchError("widths must be positive")
    if sparsity < 1 or sparsity > min(widths[:-1]):
        raise ValueError(f"sparsity {sparsity} exceeds a layer width")

    rng = np.random.default_rng(seed)
    matrices = []
    for i in range(len(widths) - 1):
        n_src, n_dst = widths[i], widths[i + 1]
        bound = 1.0 / math.sqrt(n_src)
        dense = np.zeros((n_dst, n_src))
        for row in range(n_dst):
            cols = rng.choice(n_src, size=sparsity, replace=False)
            vals = rng.uniform(-bound, bound, size=sparsity)
            while np.any(vals == 0.0):  # measure-zero guard, keeps entries nonzero
                vals[vals == 0.0] = rng.uniform(-bound, bound, size=int(np.sum(vals == 0.0)))
            dense[row, cols] = vals
        matrices.append(WeightMatrix(dense))
    return Network(matrices, ActivationKind.ELU)


def _output_connected(layers) -> bool:
    reach = np.ones(layers[0].cols, dtype=bool)
    for w in layers:
        reach = (np.abs(w.dense) > 0.0) @ reach
        if not np.any(reach):
            return False
    return bool(reach[0])


def prune_network(net: Network, fraction: float) -> Network:
    """Remove the floor(fraction * nnz) globally smallest-magnitude weights.

    Ties break in (layer, row, col) order. Raises PruningError if no
    input-to-output path survives.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    triples = []
    for li, w in enumerate(net.layers):
        for r, c, v in w.entries():
            triples.append((abs(v), li, r, c))
    k = int(math.floor(fraction * len(triples)))
    if k == 0:
        return Network([WeightMatrix(w.dense) for w in net.layers], net.activation)
    triples.sort()
    doomed = {(li, r, c) for _, li, r, c in triples[:k]}
    new_layers = []
    for li, w in enumerate(net.layers):
        dense = w.dense.copy()
        for (lj, r, c) in doomed:
            if lj == li:
                dense[r, c] = 0.0
        new_layers.append(WeightMatrix(dense))
    if not _output_connected(new_layers):
        raise PruningError(f"pruning fraction {fraction} disconnects the output")
    return Network(new_layers, net.activation)


def ubp(net: Network) -> float:
    """Product of layer-wise l-inf operator norms; the trivial upper bound."""
    out = 1.0
    for w in net.layers:
        out *= w.linf_norm()
    return out


def gradient_many(net: Network, xs: np.ndarray) -> np.ndarray:
    """Gradients at a batch of points, one row per point."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != net.input_size:
        raise DimensionMismatchError(f"batch must have shape (*, {net.input_size})")
    pre = []
    a = xs
    for w in net.layers[:-1]:
        z = a @ w.dense.T
        pre.append(z)
        a = net.activation.apply(z)
    v = np.broadcast_to(net.layers[-1].dense[0], pre[-1].shape).copy()
    for i in range(net.depth - 1, 0, -1):
        v = net.activation.derivative(pre[i - 1]) * v
        v = v @ net.layers[i - 1].dense
    return v


def lbs(net: Network, samples: int = 50000, radius: float = 1.0, seed: int = 0) -> float:
    """Sampled lower bound: max l1 gradient norm over uniform points in
    [-radius, radius]^n_inputs. Deterministic per seed."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = -math.inf
    chunk = 8192
    done = 0
    while done < samples:
        take = min(chunk, samples - done)
        xs = rng.uniform(-radius, radius, size=(take, net.input_size))
        grads = gradient_many(net, xs)
        best = max(best, float(np.max(np.sum(np.abs(grads), axis=1))))
        done += take
    return best


@dataclass(frozen=True)
class NeuronBounds:
    """Per-hidden-neuron activation-derivative range, in variable order
    (hidden layer 1 first). Optionally records the ball that produced it."""

    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray | None = None
    radius: float | None = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower/upper must be 1-D arrays of equal length")
        if np.any(lower < 0.0) or np.any(upper > 1.0) or np.any(lower > upper):
            raise ValueError("need 0 <= lower <= upper <= 1 elementwise")


def preactivation_bounds(net: Network, x0, eps: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Interval propagation: guaranteed enclosures of every hidden
    preactivation over the l-inf ball of radius eps around x0."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.input_size,):
        raise DimensionMismatchError(f"x0 must have length {net.input_size}")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    lo, hi = x0 - eps, x0 + eps
    out = []
    for w in net.layers[:-1]:
        pos = np.maximum(w.dense, 0.0)
        neg = np.minimum(w.dense, 0.0)
        plo = pos @ lo + neg @ hi
        phi = pos @ hi + neg @ lo
        out.append((plo, phi))
        lo, hi = net.activation.apply(plo), net.activation.apply(phi)
    return out


def derivative_bounds(net: Network, pre: list[tuple[np.ndarray, np.ndarray]]) -> NeuronBounds:
    """Activation-derivative ranges from preactivation intervals. The
    derivative is monotone nondecreasing, so endpoint evaluation suffices."""
    lows, highs = [], []
    for plo, phi in pre:
        lows.append(net.activation.derivative(plo))
        highs.append(net.activation.derivative(phi))
    return NeuronBounds(np.concatenate(lows), np.concatenate(highs))


def local_derivative_bounds(net: Network, x0, eps: float) -> NeuronBounds:
    """Derivative ranges over the eps-ball around x0 (records the ball)."""
    pre = preactivation_bounds(net, x0, eps)
    nb = derivative_bounds(net, pre)
    return NeuronBounds(nb.lower, nb.upper, center=np.asarray(x0, dtype=float), radius=float(eps))
