"""Sparse multivariate polynomials over the global network variable vector.

The variable vector concatenates one block per network layer: the input
block first (it encodes the dual-norm direction, rescaled to [0, 1]), then
one block per hidden layer holding the activation-derivative variables.
Monomials are sparse sorted tuples of (variable, exponent) pairs; the empty
tuple is the constant monomial. Coefficients are 64-bit floats and exact
zeros are dropped eagerly, so an identically-zero polynomial has an empty
term map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

Monomial = tuple[tuple[int, int], ...]

CONSTANT_MONOMIAL: Monomial = ()


def monomial(pairs: Iterable[tuple[int, int]]) -> Monomial:
    """Normalize (variable, exponent) pairs: drop zero exponents, sort by variable."""
    merged: dict[int, int] = {}
    for v, e in pairs:
        if e < 0:
            raise ValueError(f"negative exponent {e} for variable {v}")
        if e:
            merged[v] = merged.get(v, 0) + e
    return tuple(sorted(merged.items()))


def monomial_degree(mono: Monomial) -> int:
    return sum(e for _, e in mono)


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for v, e in b:
        merged[v] = merged.get(v, 0) + e
    return tuple(sorted(merged.items()))


def monomial_key(mono: Monomial):
    """Graded-lexicographic sort key: total degree first, then lexicographic
    preferring lower variable indices and higher exponents."""
    return (monomial_degree(mono), tuple((v, -e) for v, e in mono))


def monomial_text(mono: Monomial) -> str:
    return " ".join(f"{v}^{e}" for v, e in mono)


class Polynomial:
    """Immutable-by-convention sparse polynomial with float coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Monomial, float] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        self.nvars = nvars
        clean: dict[Monomial, float] = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff == 0.0:
                    continue
                if mono and mono[-1][0] >= nvars:
                    raise ValueError(f"variable {mono[-1][0]} out of range (nvars={nvars})")
                clean[mono] = float(coeff)
        self.terms = clean

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: float) -> "Polynomial":
        return cls(nvars, {CONSTANT_MONOMIAL: value})

    @classmethod
    def variable(cls, nvars: int, v: int) -> "Polynomial":
        if not 0 <= v < nvars:
            raise ValueError(f"variable {v} out of range")
        return cls(nvars, {((v, 1),): 1.0})

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        raise TypeError("Polynomial is not hashable")

    def coefficient(self, mono: Monomial) -> float:
        return self.terms.get(mono, 0.0)

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(monomial_degree(m) for m in self.terms)

    def variables(self) -> tuple[int, ...]:
        seen: set[int] = set()
        for mono in self.terms:
            for v, _ in mono:
                seen.add(v)
        return tuple(sorted(seen))

    def is_multilinear(self) -> bool:
        return all(e <= 1 for mono in self.terms for _, e in mono)

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("nvars mismatch")
            return other
        return Polynomial.constant(self.nvars, float(other))

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            s = out.get(mono, 0.0) + coeff
            if s == 0.0:
                out.pop(mono, None)
            else:
                out[mono] = s
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            scale = float(other)
            if scale == 0.0:
                return Polynomial.zero(self.nvars)
            return Polynomial(self.nvars, {m: c * scale for m, c in self.terms.items()})
        if other.nvars != self.nvars:
            raise ValueError("nvars mismatch")
        out: dict[Monomial, float] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = monomial_mul(ma, mb)
                s = out.get(mono, 0.0) + ca * cb
                if s == 0.0:
                    out.pop(mono, None)
                else:
                    out[mono] = s
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.nvars,):
            raise ValueError(f"expected point of length {self.nvars}, got shape {x.shape}")
        total = 0.0
        for mono, coeff in self.terms.items():
            term = coeff
            for v, e in mono:
                term *= x[v] ** e
            total += term
        return total

    def sorted_monomials(self) -> list[Monomial]:
        return sorted(self.terms, key=monomial_key)

    def dump_lines(self) -> list[str]:
        """Debug dump, one term per line: "coeff: i1^e1 i2^e2 ..." in graded-lex order."""
        lines = []
        for mono in self.sorted_monomials():
            suffix = monomial_text(mono)
            lines.append(f"{self.terms[mono]:.17g}:" + (" " + suffix if suffix else ""))
        return lines

    def __repr__(self) -> str:
        body = " + ".join(
            f"{c:g}*{monomial_text(m)}" if m else f"{c:g}" for m, c in sorted(self.terms.items())
        )
        return f"Polynomial({self.nvars}, {body or '0'})"


@dataclass(frozen=True)
class VariableIndexing:
    """Maps (layer, neuron) to a flat variable index.

    Layer 0 is the input block; layer i >= 1 is the i-th hidden layer.
    Blocks are laid out consecutively, so the index of neuron j in layer i is
    offset(i) + j.
    """

    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least the input layer and one hidden layer")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")

    @classmethod
    def from_network(cls, net) -> "VariableIndexing":
        sizes = [net.layers[0].cols] + [w.rows for w in net.layers[:-1]]
        return cls(tuple(sizes))

    @property
    def nvars(self) -> int:
        return sum(self.layer_sizes)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    def offset(self, layer: int) -> int:
        if not 0 <= layer < len(self.layer_sizes):
            raise ValueError(f"layer {layer} out of range")
        return sum(self.layer_sizes[:layer])

    def index(self, layer: int, j: int) -> int:
        if not 0 <= j < self.layer_sizes[layer]:
            raise ValueError(f"neuron {j} out of range for layer {layer}")
        return self.offset(layer) + j

    def layer_of(self, v: int) -> tuple[int, int]:
        if not 0 <= v < self.nvars:
            raise ValueError(f"variable {v} out of range")
        for layer, size in enumerate(self.layer_sizes):
            if v < size:
                return layer, v
            v -= size
        raise AssertionError("unreachable")


def norm_gradient_polynomial(net) -> Polynomial:
    """Expand the dual-norm gradient objective of `net` over [0, 1]^n.

    The input variables encode the sign pattern t through t = 2*s0 - 1, so the
    result is (2*s0 - 1)^T W1^T prod_i Diag(s_i) W_{i+1}^T expanded in the
    monomial basis. Built by sparse matrix-polynomial products from the output
    layer backwards, which keeps the cost polynomial per layer instead of
    enumerating paths.
    """
    idx = VariableIndexing.from_network(net)
    n = idx.nvars
    d = net.depth

    # u[j]: polynomial attached to neuron j of the deepest variable layer
    w_last = net.layers[-1].dense[0]
    u = [
        Polynomial(n, {((idx.index(d - 1, j), 1),): float(w_last[j])})
        for j in range(len(w_last))
    ]
    for layer in range(d - 1, 1, -1):
        w = net.layers[layer - 1].dense  # connects variable layer (layer-1) -> layer
        size_prev = w.shape[1]
        nxt = [Polynomial.zero(n) for _ in range(size_prev)]
        rows, cols = np.nonzero(w)
        for a, b in zip(rows.tolist(), cols.tolist()):
            nxt[b] = nxt[b] + u[a] * float(w[a, b])
        for b in range(size_prev):
            nxt[b] = nxt[b] * Polynomial.variable(n, idx.index(layer - 1, b))
        u = nxt

    p = Polynomial.zero(n)
    w1 = net.layers[0].dense
    rows, cols = np.nonzero(w1)
    contributions = [Polynomial.zero(n) for _ in range(w1.shape[1])]
    for a, b in zip(rows.tolist(), cols.tolist()):
        contributions[b] = contributions[b] + u[a] * float(w1[a, b])
    for b, contrib in enumerate(contributions):
        if not contrib.terms:
            continue
        t_b = Polynomial(n, {((idx.index(0, b), 1),): 2.0, CONSTANT_MONOMIAL: -1.0})
        p = p + t_b * contrib
    return p


def substitute_affine(p: Polynomial, mapping: dict[int, tuple[float, float]]) -> Polynomial:
    """Replace variable v by shift + scale * v for every v in `mapping`."""
    out: dict[Monomial, float] = {}
    for mono, coeff in p.terms.items():
        partial: dict[Monomial, float] = {CONSTANT_MONOMIAL: coeff}
        for v, e in mono:
            if v not in mapping:
                factor = ((v, e),)
                partial = {monomial_mul(m, factor): c for m, c in partial.items()}
                continue
            shift, scale = mapping[v]
            expanded: dict[Monomial, float] = {}
            for t in range(e + 1):
                w = math.comb(e, t) * (shift ** (e - t)) * (scale ** t)
                if w == 0.0:
                    continue
                factor = ((v, t),) if t else CONSTANT_MONOMIAL
                for m, c in partial.items():
                    key = monomial_mul(m, factor)
                    expanded[key] = expanded.get(key, 0.0) + c * w
            partial = expanded
        for m, c in partial.items():
            s = out.get(m, 0.0) + c
            if s == 0.0:
                out.pop(m, None)
            else:
                out[m] = s
    return Polynomial(p.nvars, out)


def local_norm_gradient_polynomial(net, bounds) -> Polynomial:
    """Norm-gradient polynomial after rescaling each hidden variable to its
    local range [l, u]: s = l + (u - l) * s_tilde. Input variables keep [0, 1].
    A degenerate variable (u == l) is eliminated by constant substitution.
    """
    idx = VariableIndexing.from_network(net)
    lower = np.asarray(bounds.lower, dtype=float)
    upper = np.asarray(bounds.upper, dtype=float)
    n_hidden = idx.nvars - idx.input_size
    if lower.shape != (n_hidden,) or upper.shape != (n_hidden,):
        raise ValueError(f"bounds must cover the {n_hidden} hidden variables")
    if np.any(upper < lower):
        raise ValueError("upper bound below lower bound")
    p = norm_gradient_polynomial(net)
    mapping = {
        idx.input_size + j: (float(lower[j]), float(upper[j] - lower[j]))
        for j in range(n_hidden)
    }
    return substitute_affine(p, mapping)
