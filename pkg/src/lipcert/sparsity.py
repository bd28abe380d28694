"""Connectivity structure of a network and the variable cliques it induces.

The layered connectivity graph has one vertex per variable (inputs and hidden
neurons) and a directed edge wherever a nonzero weight joins consecutive
variable layers. Per last-hidden-layer neuron, its ancestor set forms one
clique; together these cover every monomial of the norm-gradient polynomial.
For dense networks the ordered cliques also satisfy the running-intersection
property; for arbitrary sparsity that can fail, which is reported rather than
raised (the certificate built on the pattern stays valid either way).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .network import Network
from .polynomial import Polynomial, VariableIndexing


@dataclass(frozen=True)
class CompGraph:
    """Layered DAG of a network: `masks[i]` is the boolean pattern of the
    weight matrix joining variable layer i to layer i+1."""

    layer_sizes: tuple[int, ...]
    masks: tuple[np.ndarray, ...]

    @property
    def edge_count(self) -> int:
        return int(sum(np.count_nonzero(m) for m in self.masks))

    def edges(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        out = []
        for layer, mask in enumerate(self.masks):
            rows, cols = np.nonzero(mask)
            out.extend((((layer, int(c)), (layer + 1, int(r)))) for r, c in zip(rows, cols))
        return sorted(out)


def computational_graph(net: Network) -> CompGraph:
    """Vertices are variable-layer neurons; edges follow nonzero weights
    between consecutive variable layers (the output row plays no part)."""
    sizes = net.variable_widths
    masks = tuple(np.abs(w.dense) > 0.0 for w in net.layers[:-1])
    return CompGraph(tuple(sizes), masks)


@dataclass(frozen=True)
class SparsityPattern:
    """Ordered variable cliques over the flat variable indexing."""

    cliques: tuple[tuple[int, ...], ...]
    nvars: int

    def __post_init__(self):
        if not self.cliques:
            raise ValueError("pattern needs at least one clique")
        for clique in self.cliques:
            if not clique:
                raise ValueError("empty clique")
            if any(not 0 <= v < self.nvars for v in clique):
                raise ValueError("clique variable out of range")

    @property
    def m(self) -> int:
        return len(self.cliques)

    @property
    def max_clique(self) -> int:
        return max(len(c) for c in self.cliques)


def single_clique_pattern(nvars: int) -> SparsityPattern:
    """The trivial pattern: one clique of all variables (dense mode)."""
    return SparsityPattern((tuple(range(nvars)),), nvars)


def induced_pattern(graph: CompGraph, indexing: VariableIndexing) -> SparsityPattern:
    """One clique per last-hidden-layer neuron: the neuron plus all its
    ancestors, found by reverse breadth-first search. Cliques are ordered by
    neuron index; each is sorted ascending."""
    if graph.layer_sizes != indexing.layer_sizes:
        raise ValueError("graph and indexing disagree on layer sizes")
    last = len(graph.layer_sizes) - 1
    cliques = []
    for neuron in range(graph.layer_sizes[last]):
        members = {indexing.index(last, neuron)}
        frontier = np.zeros(graph.layer_sizes[last], dtype=bool)
        frontier[neuron] = True
        for layer in range(last, 0, -1):
            mask = graph.masks[layer - 1]
            prev = mask[frontier].any(axis=0)
            offset = indexing.offset(layer - 1)
            members.update(offset + j for j in np.flatnonzero(prev))
            frontier = prev
        cliques.append(tuple(sorted(members)))
    return SparsityPattern(tuple(cliques), indexing.nvars)


@dataclass(frozen=True)
class ValidationReport:
    covers: bool
    decomposes: bool
    rip: bool
    uncovered: tuple[int, ...]
    clique_term_counts: tuple[int, ...]


def validate_pattern(pattern: SparsityPattern, p: Polynomial) -> ValidationReport:
    """Check the pattern against p: (a) the cliques cover p's variables,
    (b) each monomial fits inside a clique (greedy first-cover assignment),
    (c) the clique order satisfies the running-intersection property.
    A failed check is reported, never raised.
    """
    clique_sets = [set(c) for c in pattern.cliques]
    union = set().union(*clique_sets)
    uncovered = tuple(sorted(set(p.variables()) - union))

    counts = [0] * pattern.m
    decomposes = True
    for mono in p.sorted_monomials():
        support = {v for v, _ in mono}
        for i, cs in enumerate(clique_sets):
            if support <= cs:
                counts[i] += 1
                break
        else:
            decomposes = False

    rip = True
    seen: set[int] = set(clique_sets[0])
    for i in range(1, pattern.m):
        overlap = clique_sets[i] & seen
        if not any(overlap <= clique_sets[l] for l in range(i)):
            rip = False
            break
        seen |= clique_sets[i]

    return ValidationReport(not uncovered, decomposes, rip, uncovered, tuple(counts))


@dataclass(frozen=True)
class CliqueStats:
    m: int
    max_clique: int
    term_bound: int
    k: int


def clique_stats(pattern: SparsityPattern, k: int) -> CliqueStats:
    """Pattern size summary plus sum_i C(2|I_i| + k, k), the upper bound on
    the number of distinct certificate products at hierarchy degree k.
    Exact integer arithmetic, so the bound never saturates."""
    if k < 1:
        raise ValueError("k must be >= 1")
    bound = sum(math.comb(2 * len(c) + k, k) for c in pattern.cliques)
    return CliqueStats(pattern.m, pattern.max_clique, bound, k)


def pattern_to_json(pattern: SparsityPattern, rip: bool) -> str:
    return json.dumps({"cliques": [list(c) for c in pattern.cliques], "rip": bool(rip)})
