"""Shared builders and independent reference implementations for the tests.

The reference routines here deliberately avoid the library code paths they
check: products are evaluated in unexpanded matrix form, maxima by recursive
variable elimination, LPs by brute-force basic-solution enumeration.
"""

import itertools
import math

import numpy as np
import pytest

from lipcert import ActivationKind, Network, WeightMatrix


def dense_net(arrays, activation=ActivationKind.ELU) -> Network:
    return Network([WeightMatrix(np.asarray(a, dtype=float)) for a in arrays], activation)


@pytest.fixture
def one11() -> Network:
    """The 1-1-1 network with unit weights; its certified bound is exactly 1."""
    return dense_net([[[1.0]], [[1.0]]])


def product_form_value(net: Network, x: np.ndarray) -> float:
    """Norm-gradient objective evaluated without expansion: with the input
    block encoding t = 2*s0 - 1, computes t^T W1^T prod Diag(s_i) W_{i+1}^T."""
    widths = net.variable_widths
    s_blocks = []
    pos = 0
    for w in widths:
        s_blocks.append(np.asarray(x[pos:pos + w], dtype=float))
        pos += w
    t = 2.0 * s_blocks[0] - 1.0
    acc = t @ net.layers[0].dense.T
    for i in range(1, net.depth):
        acc = (acc * s_blocks[i]) @ net.layers[i].dense.T
    return float(acc[0])


def normalized_product_value(net: Network, s_blocks) -> float:
    """The [-1, 1]-normalized objective:
    (1/2^(d-1)) s0^T W1^T prod Diag(s_i + 1) W_{i+1}^T."""
    acc = np.asarray(s_blocks[0], dtype=float) @ net.layers[0].dense.T
    for i in range(1, net.depth):
        acc = (acc * (np.asarray(s_blocks[i], dtype=float) + 1.0)) @ net.layers[i].dense.T
    return float(acc[0]) / 2.0 ** (net.depth - 1)


def multilinear_max_recursive(p) -> float:
    """Max of a multilinear polynomial over [0,1]^n by conditioning on each
    variable in turn and taking the better restriction."""
    terms = {m: c for m, c in p.terms.items()}

    def rec(terms):
        live = sorted({v for mono in terms for v, _ in mono})
        if not live:
            return terms.get((), 0.0)
        v = live[0]
        at0 = {}
        at1 = {}
        for mono, coeff in terms.items():
            if any(u == v for u, _ in mono):
                rest = tuple(pair for pair in mono if pair[0] != v)
                at1[rest] = at1.get(rest, 0.0) + coeff
            else:
                at0[mono] = at0.get(mono, 0.0) + coeff
                at1[mono] = at1.get(mono, 0.0) + coeff
        return max(rec(at0), rec(at1))

    return rec(terms)


def enumerate_lp_minimum(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """min c@x s.t. Ax = b, x >= 0 by enumerating basic solutions."""
    m, n = A.shape
    best = math.inf
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        try:
            xb = np.linalg.solve(B, b)
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(B @ xb - b)) > 1e-8:
            continue
        if np.any(xb < -1e-9):
            continue
        x = np.zeros(n)
        x[list(cols)] = xb
        best = min(best, float(c @ x))
    return best


def random_feasible_lp(rng, m: int, n: int):
    """Random bounded feasible instance of min c@x, Ax=b, x>=0."""
    A = rng.standard_normal((m, n))
    x0 = np.abs(rng.standard_normal(n))
    b = A @ x0
    c = np.abs(rng.standard_normal(n))
    return A, b, c
