import io
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import sparse
from scipy.optimize import linprog

from lipcert import assemble_lp, enumerate_terms, norm_gradient_polynomial, single_clique_pattern
from lipcert.certificate import AssembledLP, prune_degree2_terms
from lipcert.lp import export_mps, mps_bytes, solve, solve_standard_form

from conftest import enumerate_lp_minimum, random_feasible_lp

GOLDEN = Path(__file__).parent / "golden"


def one11_lp():
    import lipcert as lc

    net = lc.Network([lc.WeightMatrix(np.array([[1.0]])),
                      lc.WeightMatrix(np.array([[1.0]]))], lc.ActivationKind.ELU)
    p = norm_gradient_polynomial(net)
    terms = enumerate_terms(single_clique_pattern(2), 2)
    terms, _ = prune_degree2_terms(p, terms)
    return assemble_lp(p, terms)


class TestSimplex:
    def test_tiny_example(self):
        # min x1 s.t. x1 - x2 = 1, x >= 0
        status, x, _, _ = solve_standard_form(np.array([[1.0, -1.0]]),
                                              np.array([1.0]), np.array([1.0, 0.0]))
        assert status == "optimal"
        assert x[0] == pytest.approx(1.0, abs=1e-9)
        assert x[1] == pytest.approx(0.0, abs=1e-9)

    def test_contradictory_row_infeasible(self):
        status, x, _, _ = solve_standard_form(np.array([[0.0, 0.0]]),
                                              np.array([1.0]), np.array([1.0, 1.0]))
        assert status == "infeasible"

    def test_zero_rows_dropped(self):
        A = np.array([[0.0, 0.0], [1.0, 1.0]])
        status, x, _, _ = solve_standard_form(A, np.array([0.0, 2.0]),
                                              np.array([1.0, 3.0]))
        assert status == "optimal"
        assert x @ np.array([1.0, 3.0]) == pytest.approx(2.0, abs=1e-9)

    def test_unbounded_detected(self):
        status, *_ = solve_standard_form(np.array([[1.0, -1.0]]), np.array([0.0]),
                                         np.array([-1.0, 0.0]))
        assert status == "unbounded"

    def test_random_instances_match_basis_enumeration(self):
        rng = np.random.default_rng(31)
        checked = 0
        while checked < 20:
            m = int(rng.integers(2, 5))
            n = int(rng.integers(m + 1, 9))
            A, b, c = random_feasible_lp(rng, m, n)
            expected = enumerate_lp_minimum(A, b, c)
            status, x, _, _ = solve_standard_form(A, b, c)
            assert status == "optimal"
            assert c @ x == pytest.approx(expected, abs=1e-7)
            assert np.max(np.abs(A @ x - b)) < 1e-8
            checked += 1

    def test_deterministic_pivoting(self):
        rng = np.random.default_rng(5)
        A, b, c = random_feasible_lp(rng, 4, 8)
        r1 = solve_standard_form(A, b, c)
        r2 = solve_standard_form(A, b, c)
        assert r1[0] == r2[0]
        assert np.array_equal(r1[1], r2[1])
        assert r1[2] == r2[2]  # identical pivot counts

    def test_iteration_limit(self):
        rng = np.random.default_rng(7)
        A, b, c = random_feasible_lp(rng, 4, 8)
        status, *_ = solve_standard_form(A, b, c, max_pivots=1)
        assert status == "iteration_limit"


class TestCertificateLPInterface:
    def test_one11_solution_invariants(self):
        lp = one11_lp()
        solution = solve(lp)
        assert solution.status == "optimal"
        assert solution.objective == pytest.approx(1.0, abs=1e-6)
        assert solution.feasibility_residual <= 1e-8
        assert np.all(solution.y[1:] >= -1e-9)

    def test_phase2_trace_never_beats_optimum(self):
        lp = one11_lp()
        solution = solve(lp)
        for value in solution.objective_trace:
            assert value >= solution.objective - 1e-7

    def test_infeasible_certificate_lp(self, one11):
        p = norm_gradient_polynomial(one11)
        lp = assemble_lp(p, enumerate_terms(single_clique_pattern(2), 1))
        solution = solve(lp)
        assert solution.status == "infeasible"
        assert solution.objective == math.inf


def parse_free_mps(text: str):
    """Minimal reader for the subset of free MPS this package writes."""
    rows: list[str] = []
    row_kind: dict[str, str] = {}
    cols: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    free_cols: set[str] = set()
    section = None
    for line in text.splitlines():
        if not line.strip() or line.startswith("*"):
            continue
        head = line.split()
        if head[0] in {"NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"}:
            section = head[0]
            continue
        if section == "ROWS":
            kind, name = head
            row_kind[name] = kind
            if kind != "N":
                rows.append(name)
        elif section == "COLUMNS":
            col, row, value = head
            cols.setdefault(col, {})[row] = float(value)
        elif section == "RHS":
            _, row, value = head
            rhs[row] = float(value)
        elif section == "BOUNDS":
            bound, _, col = head
            assert bound == "FR"
            free_cols.add(col)
    col_names = sorted(cols, key=lambda name: (name != "LAMBDA", name))
    obj_row = next(name for name, kind in row_kind.items() if kind == "N")
    A = np.zeros((len(rows), len(col_names)))
    c = np.zeros(len(col_names))
    for j, col in enumerate(col_names):
        for row, value in cols[col].items():
            if row == obj_row:
                c[j] = value
            else:
                A[rows.index(row), j] = value
    b = np.array([rhs.get(row, 0.0) for row in rows])
    bounds = [(None, None) if col in free_cols else (0.0, None) for col in col_names]
    return A, b, c, bounds


class TestMPSExport:
    def test_golden_bytes(self):
        blob = mps_bytes(one11_lp())
        assert blob == (GOLDEN / "one11_k2.mps").read_bytes()

    def test_deterministic(self):
        lp = one11_lp()
        assert mps_bytes(lp) == mps_bytes(lp)

    def test_sink_and_path(self, tmp_path):
        lp = one11_lp()
        buf = io.BytesIO()
        export_mps(lp, buf)
        path = tmp_path / "out.mps"
        export_mps(lp, path)
        assert buf.getvalue() == path.read_bytes() == mps_bytes(lp)

    def test_empty_constraint_lp(self):
        lp = AssembledLP(nvars=0, row_monomials=(),
                         matrix=sparse.csc_matrix((0, 1)), rhs=np.zeros(0), terms=())
        text = mps_bytes(lp).decode()
        assert "ROWS\n N COST\nCOLUMNS\n LAMBDA COST 1\nRHS\nBOUNDS\n FR BND LAMBDA\nENDATA" in text

    def test_roundtrip_through_external_solver(self):
        lp = one11_lp()
        embedded = solve(lp).objective
        A, b, c, bounds = parse_free_mps(mps_bytes(lp).decode())
        result = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs")
        assert result.status == 0
        assert result.fun == pytest.approx(embedded, abs=1e-6)
