"""Ground-truth utilities for testing: exact box maxima of multilinear
polynomials by vertex enumeration, and finite-difference gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import DimensionMismatchError, Network
from .polynomial import Polynomial

DEFAULT_VARIABLE_CAP = 22


@dataclass(frozen=True)
class OracleResult:
    value: float
    argmax: tuple[int, ...]
    vertices: int


def vertex_max(p: Polynomial, max_vars: int = DEFAULT_VARIABLE_CAP,
               chunk: int = 1 << 16) -> OracleResult:
    """Exact maximum of a multilinear polynomial over [0, 1]^n.

    Multilinearity puts the maximum on a vertex, so enumerating {0, 1}^n is
    exact. Vertices are scanned in lexicographic order (variable 0 most
    significant) and ties keep the first, i.e. lexicographically smallest,
    argmax. Vectorized in chunks; refuses more than `max_vars` variables.
    """
    if not p.is_multilinear():
        raise ValueError("polynomial is not multilinear")
    n = p.nvars
    if n > max_vars:
        raise ValueError(f"{n} variables exceed the vertex-enumeration cap {max_vars}")
    if n == 0:
        return OracleResult(p.coefficient(()), (), 1)

    const = p.coefficient(())
    supports = [tuple(v for v, _ in mono) for mono in p.terms if mono]
    coeffs = np.array([p.terms[mono] for mono in p.terms if mono])

    total = 1 << n
    best_val = -np.inf
    best_idx = -1
    shifts = n - 1 - np.arange(n)  # variable 0 = most significant bit
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        idx = np.arange(start, stop, dtype=np.int64)
        bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(float)
        vals = np.full(stop - start, const)
        for support, coeff in zip(supports, coeffs):
            prod = bits[:, support[0]]
            for v in support[1:]:
                prod = prod * bits[:, v]
            vals = vals + coeff * prod
        local_best = int(np.argmax(vals))
        if vals[local_best] > best_val:
            best_val = float(vals[local_best])
            best_idx = start + local_best
    argmax = tuple(int((best_idx >> s) & 1) for s in shifts)
    return OracleResult(best_val, argmax, total)


def finite_diff_gradient(net: Network, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of the network output."""
    if h <= 0.0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_size,):
        raise DimensionMismatchError(f"x must have length {net.input_size}")
    grad = np.zeros_like(x)
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (net.forward(xp)[0] - net.forward(xm)[0]) / (2.0 * h)
    return grad
