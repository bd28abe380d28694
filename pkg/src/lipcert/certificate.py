"""Box-positivity certificate terms and the LP hierarchy built from them.

A certificate term (alpha, beta) names the product
prod_j x_j^alpha_j (1 - x_j)^beta_j. Writing lambda - p as a nonnegative
combination of such products proves lambda >= max p over [0, 1]^n, and
minimizing lambda over combinations of total degree at most k gives a
nonincreasing sequence of certified upper bounds. Restricting the joint
support of (alpha, beta) to the cliques of a sparsity pattern shrinks the
LP drastically while keeping every such lambda a valid bound.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from scipy import sparse

from . import lp as lpsolver
from .network import Network, NeuronBounds
from .polynomial import (
    CONSTANT_MONOMIAL,
    Monomial,
    Polynomial,
    VariableIndexing,
    local_norm_gradient_polynomial,
    monomial_key,
    norm_gradient_polynomial,
)
from .sparsity import (
    SparsityPattern,
    clique_stats,
    computational_graph,
    induced_pattern,
    single_clique_pattern,
    validate_pattern,
)

DEFAULT_TERM_CAP = 5_000_000
TERM_CAP_ENV = "LIPOPT_MAX_TERMS"

PAIR_COEFF_TOL = 1e-12


class TermBudgetError(RuntimeError):
    """Raised before materializing more certificate terms than the cap allows."""

    def __init__(self, count: int, cap: int, bound: int):
        super().__init__(
            f"certificate term budget exceeded: reached {count} distinct terms "
            f"(cap {cap}, counting bound {bound}); raise the cap via "
            f"{TERM_CAP_ENV} or lower k"
        )
        self.count = count
        self.cap = cap
        self.bound = bound


def term_cap() -> int:
    raw = os.environ.get(TERM_CAP_ENV)
    if raw is None:
        return DEFAULT_TERM_CAP
    cap = int(raw)
    if cap < 1:
        raise ValueError(f"{TERM_CAP_ENV} must be positive")
    return cap


@dataclass(frozen=True)
class CertificateTerm:
    """Exponent pair indexing one product; both parts are sparse monomials."""

    alpha: Monomial
    beta: Monomial

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.alpha) + sum(e for _, e in self.beta)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({v for v, _ in self.alpha} | {v for v, _ in self.beta}))

    def sort_key(self):
        return (self.degree, monomial_key(self.alpha), monomial_key(self.beta))


EMPTY_TERM = CertificateTerm((), ())


def dense_term_count(nvars: int, k: int) -> int:
    """Number of exponent pairs of total degree <= k over all 2*nvars slots,
    including the empty pair: C(2*nvars + k, k). Exact integer arithmetic."""
    if nvars < 1 or k < 1:
        raise ValueError("need nvars >= 1 and k >= 1")
    return math.comb(2 * nvars + k, k)


def enumerate_terms(pattern: SparsityPattern, k: int,
                    max_terms: int | None = None) -> list[CertificateTerm]:
    """Deduplicated union over cliques of all (alpha, beta) with joint support
    inside the clique and total degree <= k. Order: cliques in pattern order,
    new terms within a clique in graded order. A single all-variable clique
    reproduces the dense term set. Exceeding `max_terms` distinct terms raises
    TermBudgetError; terms are never silently truncated."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cap = term_cap() if max_terms is None else max_terms
    seen: set[CertificateTerm] = set()
    out: list[CertificateTerm] = []
    for clique in pattern.cliques:
        size = len(clique)
        fresh = []
        for deg in range(0, k + 1):
            for combo in combinations_with_replacement(range(2 * size), deg):
                alpha: dict[int, int] = {}
                beta: dict[int, int] = {}
                for slot in combo:
                    if slot < size:
                        v = clique[slot]
                        alpha[v] = alpha.get(v, 0) + 1
                    else:
                        v = clique[slot - size]
                        beta[v] = beta.get(v, 0) + 1
                term = CertificateTerm(tuple(sorted(alpha.items())),
                                       tuple(sorted(beta.items())))
                if term not in seen:
                    seen.add(term)
                    fresh.append(term)
                    if len(seen) > cap:
                        raise TermBudgetError(len(seen), cap,
                                              clique_stats(pattern, k).term_bound)
        fresh.sort(key=CertificateTerm.sort_key)
        out.extend(fresh)
    return out


def expand_h(term: CertificateTerm, nvars: int) -> Polynomial:
    """Expand prod x^alpha (1-x)^beta into the monomial basis."""
    poly = Polynomial(nvars, {term.alpha: 1.0})
    for v, e in term.beta:
        factor = Polynomial(nvars, {CONSTANT_MONOMIAL: 1.0, ((v, 1),): -1.0})
        for _ in range(e):
            poly = poly * factor
    return poly


def prune_degree2_terms(p: Polynomial, terms: list[CertificateTerm]
                        ) -> tuple[list[CertificateTerm], bool]:
    """Drop the four degree-2 terms supported on a variable pair {i, j}
    whenever p has no x_i*x_j monomial. Only meaningful for degree-2
    certificates of quadratics: any nonnegative degree-2 decomposition can be
    rewritten without those terms, so the LP optimum is unchanged. Returns
    (terms, applied); a no-op when deg p > 2."""
    if p.degree() > 2:
        return list(terms), False
    live_pairs = {
        (mono[0][0], mono[1][0])
        for mono, coeff in p.terms.items()
        if len(mono) == 2 and mono[0][1] == 1 and mono[1][1] == 1
        and abs(coeff) > PAIR_COEFF_TOL
    }
    kept = []
    for term in terms:
        support = term.support
        if term.degree == 2 and len(support) == 2 and tuple(support) not in live_pairs:
            continue
        kept.append(term)
    return kept, True


@dataclass(frozen=True)
class AssembledLP:
    """Equality-constrained LP matching the coefficients of lambda - sum(c*h)
    against p. Column 0 is lambda; column 1+i belongs to terms[i]. Row order
    is graded-lex over every monomial appearing in p or in any expanded h."""

    nvars: int
    row_monomials: tuple[Monomial, ...]
    matrix: sparse.csc_matrix
    rhs: np.ndarray
    terms: tuple[CertificateTerm, ...]

    @property
    def num_rows(self) -> int:
        return len(self.row_monomials)

    @property
    def num_terms(self) -> int:
        return len(self.terms)


def assemble_lp(p: Polynomial, terms: list[CertificateTerm]) -> AssembledLP:
    """Build the coefficient-matching LP. Monomials absent from both p and
    every h impose 0 = 0 and are omitted. Infeasibility (e.g. k below the
    degree of p) surfaces at solve time as an unmatched row."""
    if not terms:
        raise ValueError("need at least one certificate term")
    expansions = [expand_h(t, p.nvars) for t in terms]
    monomials = set(p.terms)
    monomials.add(CONSTANT_MONOMIAL)  # lambda always has a row to live on
    for h in expansions:
        monomials.update(h.terms)
    ordered = sorted(monomials, key=monomial_key)
    row_of = {mono: i for i, mono in enumerate(ordered)}

    rows = [row_of[CONSTANT_MONOMIAL]]
    cols = [0]
    vals = [1.0]
    for i, h in enumerate(expansions):
        for mono, coeff in h.terms.items():
            rows.append(row_of[mono])
            cols.append(1 + i)
            vals.append(-coeff)
    matrix = sparse.csc_matrix(
        (vals, (rows, cols)), shape=(len(ordered), 1 + len(terms))
    )
    rhs = np.zeros(len(ordered))
    for mono, coeff in p.terms.items():
        rhs[row_of[mono]] = coeff
    return AssembledLP(p.nvars, tuple(ordered), matrix, rhs, tuple(terms))


def certificate_residual(p: Polynomial, terms, lam: float, c: np.ndarray) -> float:
    """Reconstruct lambda - sum(c_t * h_t) from scratch and compare it to p
    coefficientwise; returns the max absolute coefficient mismatch."""
    acc: dict[Monomial, float] = {CONSTANT_MONOMIAL: lam}
    for weight, term in zip(c, terms):
        if weight == 0.0:
            continue
        for mono, coeff in expand_h(term, p.nvars).terms.items():
            acc[mono] = acc.get(mono, 0.0) - weight * coeff
    worst = 0.0
    for mono in set(acc) | set(p.terms):
        worst = max(worst, abs(acc.get(mono, 0.0) - p.terms.get(mono, 0.0)))
    return worst


@dataclass
class BoundReport:
    """Result of the end-to-end bounding pipeline."""

    theta: float
    k: int
    mode: str
    terms: int
    rows: int
    rip: bool
    status: str
    seconds: float
    pruned: bool = False
    solution: lpsolver.LPSolution | None = field(default=None, repr=False)
    lp: AssembledLP | None = field(default=None, repr=False)
    polynomial: Polynomial | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "theta": "inf" if math.isinf(self.theta) or math.isnan(self.theta)
            else self.theta,
            "k": self.k,
            "mode": self.mode,
            "terms": self.terms,
            "rows": self.rows,
            "rip": self.rip,
            "status": self.status,
            "seconds": self.seconds,
        }


def hierarchy_bound(net: Network, k: int, mode: str = "sparse",
                    bounds: NeuronBounds | None = None,
                    max_terms: int | None = None,
                    max_pivots: int = 1_000_000,
                    prune: bool = True) -> BoundReport:
    """Full pipeline: norm-gradient polynomial (locally rescaled when bounds
    are given), sparsity pattern (network-induced, or one dense clique),
    term enumeration, the degree-2 pruning shortcut when k == 2, LP assembly
    and solve. k below the network depth yields an infeasible LP, reported as
    theta = inf."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode not in ("sparse", "dense"):
        raise ValueError(f"unknown mode {mode!r}")
    start = time.perf_counter()
    indexing = VariableIndexing.from_network(net)
    if bounds is not None:
        p = local_norm_gradient_polynomial(net, bounds)
    else:
        p = norm_gradient_polynomial(net)
    if mode == "dense":
        pattern = single_clique_pattern(indexing.nvars)
    else:
        pattern = induced_pattern(computational_graph(net), indexing)
    rip = validate_pattern(pattern, p).rip
    terms = enumerate_terms(pattern, k, max_terms)
    pruned = False
    if prune and k == 2:
        terms, pruned = prune_degree2_terms(p, terms)
    assembled = assemble_lp(p, terms)
    solution = lpsolver.solve(assembled, max_pivots=max_pivots)
    theta = solution.objective if solution.status == lpsolver.STATUS_OPTIMAL else math.inf
    seconds = time.perf_counter() - start
    return BoundReport(
        theta=theta,
        k=k,
        mode=mode,
        terms=len(terms),
        rows=assembled.num_rows,
        rip=rip,
        status=solution.status,
        seconds=seconds,
        pruned=pruned,
        solution=solution,
        lp=assembled,
        polynomial=p,
    )
