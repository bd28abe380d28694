"""Quadratic reformulation of the gradient-norm problem over [-1, 1] variables
and its PSD relaxation, serialized in SDPA sparse format for external solvers.

Depth 2 is already quadratic; depth 3 becomes quadratic after lifting the
products of the two hidden layers into a new variable block. Deeper networks
are rejected. The module only builds and exports; solving the SDP is left to
out-of-process solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network


@dataclass(frozen=True)
class QuadConstraint:
    """z @ matrix @ z + linear @ z + offset <= 0 over the non-constant block z."""

    matrix: np.ndarray
    linear: np.ndarray
    offset: float


@dataclass(frozen=True)
class QCQP:
    """maximize z @ objective_matrix @ z + objective_linear @ z subject to
    the quadratic constraints; z stacks the input block, the hidden blocks
    (each scalar in [-1, 1]) and, for depth 3, the lifted product block."""

    dim: int
    input_size: int
    hidden_sizes: tuple[int, ...]
    lifted: int  # entries in the lifted block (0 when depth 2)
    objective_matrix: np.ndarray
    objective_linear: np.ndarray
    constraints: tuple[QuadConstraint, ...]
    box_count: int
    lifting_count: int

    def objective_value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return float(z @ self.objective_matrix @ z + self.objective_linear @ z)


def lift_point(net: Network, parts: list[np.ndarray]) -> np.ndarray:
    """Exactly lifted variable vector for given per-layer values: input block,
    hidden blocks, then (depth 3) the flattened outer product of the two
    hidden blocks."""
    parts = [np.asarray(p, dtype=float) for p in parts]
    if len(parts) != net.depth:
        raise ValueError(f"need {net.depth} blocks, got {len(parts)}")
    pieces = list(parts)
    if net.depth == 3:
        pieces.append(np.outer(parts[1], parts[2]).ravel())
    return np.concatenate(pieces)


def qcqp_reformulate(net: Network) -> QCQP:
    """Rewrite the normalized gradient-norm maximization as a QCQP.

    The objective is (1/2^(d-1)) * s0^T W1^T prod_i Diag(s_i + 1) W_{i+1}^T
    with every block in [-1, 1]. For depth 3 the cubic part is flattened via
    the lifted block s12[a, b] = s1[a] * s2[b]; the lifting equalities enter
    as inequality pairs, and every entry (lifted ones included, where the box
    is implied by the originals) carries a unit box constraint.
    """
    d = net.depth
    if d not in (2, 3):
        raise ValueError(f"depth-{d} reformulation not supported (depth 2 or 3 only)")
    w = [layer.dense for layer in net.layers]
    n1 = net.input_size

    if d == 2:
        h1 = w[0].shape[0]
        dim = n1 + h1
        s1_off = n1
        A = np.zeros((dim, dim))
        lin = np.zeros(dim)
        scale = 0.5
        cross = scale * (w[0].T * w[1][0])  # (n1, h1): W1[a, j] * W2[0, a]
        A[:n1, s1_off:] += cross / 2.0
        A[s1_off:, :n1] += cross.T / 2.0
        lin[:n1] = scale * (w[1] @ w[0])[0]
        lifted = 0
        hidden = (h1,)
    else:
        h1, h2 = w[0].shape[0], w[1].shape[0]
        dim = n1 + h1 + h2 + h1 * h2
        s1_off = n1
        s2_off = n1 + h1
        lift_off = n1 + h1 + h2
        A = np.zeros((dim, dim))
        lin = np.zeros(dim)
        scale = 0.25
        w32 = (w[2] @ w[1])[0]          # (h1,)
        w21 = w[1] @ w[0]               # (h2, n1)
        # cubic piece via the lifted block: W1[a,j] W2[b,a] W3[0,b] s0_j s12[a,b]
        for a in range(h1):
            for b in range(h2):
                coeff = scale * w[1][b, a] * w[2][0, b]
                if coeff == 0.0:
                    continue
                col = lift_off + a * h2 + b
                A[:n1, col] += coeff * w[0][a, :] / 2.0
                A[col, :n1] += coeff * w[0][a, :] / 2.0
        cross1 = scale * (w[0].T * w32)            # s0-s1
        A[:n1, s1_off:s1_off + h1] += cross1 / 2.0
        A[s1_off:s1_off + h1, :n1] += cross1.T / 2.0
        cross2 = scale * (w21.T * w[2][0])         # s0-s2
        A[:n1, s2_off:s2_off + h2] += cross2 / 2.0
        A[s2_off:s2_off + h2, :n1] += cross2.T / 2.0
        lin[:n1] = scale * (w[2] @ w[1] @ w[0])[0]
        lifted = h1 * h2
        hidden = (h1, h2)

    constraints: list[QuadConstraint] = []
    for v in range(dim):
        box = np.zeros((dim, dim))
        box[v, v] = 1.0
        constraints.append(QuadConstraint(box, np.zeros(dim), -1.0))
    lifting_count = 0
    if d == 3:
        for a in range(h1):
            for b in range(h2):
                q = np.zeros((dim, dim))
                q[s1_off + a, s2_off + b] = -0.5
                q[s2_off + b, s1_off + a] = -0.5
                e = np.zeros(dim)
                e[lift_off + a * h2 + b] = 1.0
                constraints.append(QuadConstraint(q, e, 0.0))
                constraints.append(QuadConstraint(-q, -e, 0.0))
                lifting_count += 1

    return QCQP(dim, n1, hidden, lifted, A, lin, tuple(constraints),
                box_count=dim, lifting_count=lifting_count)


@dataclass(frozen=True)
class ShorSDP:
    """maximize <objective, X> over X >= 0 (PSD) with X[0,0] = 1 and
    <A, X> <= 0 for every A in `constraints`. Index 0 is the constant; the
    remaining indices follow the QCQP variable layout."""

    dim: int
    objective: np.ndarray
    constraints: tuple[np.ndarray, ...]


def _embed(matrix: np.ndarray, linear: np.ndarray, offset: float) -> np.ndarray:
    dim = matrix.shape[0] + 1
    out = np.zeros((dim, dim))
    out[0, 0] = offset
    out[0, 1:] = linear / 2.0
    out[1:, 0] = linear / 2.0
    out[1:, 1:] = matrix
    return out


def shor_relax(q: QCQP) -> ShorSDP:
    """Replace the rank-one moment matrix of [1, z] by a PSD variable: every
    quadratic becomes a linear functional of X, plus the normalization
    X[0,0] = 1."""
    objective = _embed(q.objective_matrix, q.objective_linear, 0.0)
    mats = tuple(_embed(c.matrix, c.linear, c.offset) for c in q.constraints)
    return ShorSDP(q.dim + 1, objective, mats)


def _fmt(v: float) -> str:
    return format(v, ".17g")


def sdpa_bytes(sdp: ShorSDP) -> bytes:
    """SDPA sparse (.dat-s) encoding.

    Layout: Y = blockdiag(X, S) with block 1 the PSD matrix X and block 2 a
    diagonal slack block, one slack per inequality. Constraint 1 pins
    X[0,0] = 1; constraint 1+j states <A_j, X> + S_jj = 0, i.e. <A_j, X> <= 0.
    In the SDPA reading "max tr(F0 Y) s.t. tr(Fi Y) = b_i, Y >= 0" the
    reported dual value is exactly the relaxation bound.
    """
    q = len(sdp.constraints)
    lines = [
        '"SDPA sparse export: dual value = max <F0, Y> with tr(Fi Y) = b_i, Y psd',
        '"block 1: moment matrix X (index 1 = constant); block 2: slacks for the',
        '"inequality rows <A, X> <= 0; constraint 1 fixes X[1,1] = 1',
        f"{q + 1}",
        "2" if q else "1",
        f"{sdp.dim} -{q}" if q else f"{sdp.dim}",
        " ".join(["1"] + ["0"] * q),
    ]

    def emit(mat_idx: int, block: int, matrix: np.ndarray, base: int = 0):
        rows, cols = np.nonzero(np.triu(matrix))
        for i, j in zip(rows.tolist(), cols.tolist()):
            lines.append(f"{mat_idx} {block} {base + i + 1} {base + j + 1} "
                         f"{_fmt(matrix[i, j])}")

    emit(0, 1, sdp.objective)
    norm = np.zeros((sdp.dim, sdp.dim))
    norm[0, 0] = 1.0
    emit(1, 1, norm)
    for j, mat in enumerate(sdp.constraints):
        emit(2 + j, 1, mat)
        lines.append(f"{2 + j} 2 {j + 1} {j + 1} 1")
    return ("\n".join(lines) + "\n").encode("ascii")


def export_sdpa(sdp: ShorSDP, sink) -> None:
    """Write the relaxation to a binary file object or a path."""
    data = sdpa_bytes(sdp)
    if hasattr(sink, "write"):
        sink.write(data)
    else:
        with open(sink, "wb") as fh:
            fh.write(data)
