import math

import numpy as np
import pytest

from lipcert import Polynomial, finite_diff_gradient, norm_gradient_polynomial, random_network, vertex_max

from conftest import dense_net, multilinear_max_recursive


class TestVertexMax:
    def test_small_example(self):
        p = Polynomial(2, {((0, 1), (1, 1)): 2.0, ((1, 1),): -1.0})
        result = vertex_max(p)
        assert result.value == 1.0
        assert result.argmax == (1, 1)
        assert result.vertices == 4

    def test_constant_tie_breaks_to_all_zeros(self):
        p = Polynomial(3, {(): 3.0})
        result = vertex_max(p)
        assert result.value == 3.0
        assert result.argmax == (0, 0, 0)

    def test_lexicographic_tie_break(self):
        # x0 and x1 are interchangeable; the smallest argmax keeps x1 = 0...
        p = Polynomial(2, {((0, 1),): 1.0, ((1, 1),): 1.0, ((0, 1), (1, 1)): -1.0})
        result = vertex_max(p)
        assert result.value == 1.0
        assert result.argmax == (0, 1)  # (0,1) comes before (1,0) lexicographically

    def test_matches_recursive_elimination(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            terms = {}
            for _ in range(15):
                support = rng.choice(10, size=int(rng.integers(0, 4)), replace=False)
                mono = tuple(sorted((int(v), 1) for v in support))
                terms[mono] = terms.get(mono, 0.0) + float(rng.standard_normal())
            p = Polynomial(10, terms)
            assert vertex_max(p).value == pytest.approx(multilinear_max_recursive(p), abs=1e-12)

    def test_argmax_value_consistency(self):
        net = random_network([5, 5, 1], 3, seed=21)
        p = norm_gradient_polynomial(net)
        result = vertex_max(p)
        assert p.evaluate(np.array(result.argmax, dtype=float)) == pytest.approx(
            result.value, abs=1e-12)

    def test_non_multilinear_rejected(self):
        with pytest.raises(ValueError):
            vertex_max(Polynomial(1, {((0, 2),): 1.0}))

    def test_variable_cap(self):
        p = Polynomial(23, {((0, 1),): 1.0})
        with pytest.raises(ValueError):
            vertex_max(p)
        assert vertex_max(p, max_vars=23).value == 1.0

    def test_chunked_enumeration_matches_unchunked(self):
        net = random_network([6, 6, 1], 3, seed=2)
        p = norm_gradient_polynomial(net)
        a = vertex_max(p, chunk=1 << 20)
        b = vertex_max(p, chunk=37)
        assert a == b


class TestFiniteDiff:
    def test_linear_region_quadratic_accuracy(self):
        net = dense_net([[[1.0, 2.0]], [[3.0]]])
        g = finite_diff_gradient(net, [1.0, 1.0], h=1e-4)
        assert np.allclose(g, [3.0, 6.0], atol=1e-8)

    def test_matches_analytic_gradient(self):
        rng = np.random.default_rng(3)
        for seed in range(5):
            net = random_network([4, 4, 1], 3, seed=seed)
            x = rng.uniform(-1, 1, 4)
            g = net.gradient(x)
            fd = finite_diff_gradient(net, x, h=1e-5)
            assert np.max(np.abs(g - fd)) / max(1e-12, np.max(np.abs(g))) < 1e-5

    def test_saturated_region_gives_zero_vector(self):
        # deep in the ELU tail the output is constant to double precision
        net = dense_net([[[1.0, 1.0]], [[1.0]]])
        g = finite_diff_gradient(net, [-50.0, -50.0], h=1e-5)
        assert g.tolist() == [0.0, 0.0]

    def test_bad_h_rejected(self):
        net = dense_net([[[1.0]], [[1.0]]])
        with pytest.raises(ValueError):
            finite_diff_gradient(net, [0.0], h=0.0)
