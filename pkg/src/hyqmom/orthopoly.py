"""Monic orthogonal polynomials, Jacobi matrices and Gauss quadrature.

Root finding goes exclusively through symmetric-tridiagonal eigenvalue
problems (Golub & Welsch, Math. Comp. 23, 1969): the Jacobi matrix with
diagonal a_k and off-diagonals sqrt(b_k) has the polynomial roots as
eigenvalues, guaranteed real and distinct, and the quadrature weights are
b_0 times the squared first eigenvector components, guaranteed positive.
Polynomial deflation and companion matrices are never used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .moments import (
    RecurrenceCoefficients,
    _as_moment_array,
    _coeff_arrays,
    moments_to_recurrence,
)

# Two roots closer than this fraction of the spectral radius are flagged as
# near-degenerate (boundary-of-realizability inputs); not an error.
NEAR_DEGENERACY_RTOL = 1e-8


@dataclass
class Quadrature:
    """Node/weight pairs; nodes strictly increasing, weights positive."""

    nodes: np.ndarray
    weights: np.ndarray

    def power_sum(self, k):
        """Reconstructed moment sum_i w_i u_i^k."""
        return float(np.sum(self.weights * self.nodes**k))

    def to_json(self):
        return json.dumps(
            {
                "nodes": [float(x) for x in self.nodes],
                "weights": [float(w) for w in self.weights],
            }
        )


def poly_eval(coeffs, x):
    """Evaluate a low-to-high coefficient array at x (Horner)."""
    coeffs = np.asarray(coeffs)
    acc = np.zeros_like(np.asarray(x, dtype=float)) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


def poly_mul(p, q):
    return np.convolve(p, q)


def build_polynomials(rc, up_to):
    """Monic Q_0..Q_{up_to} from the recursion Q_{k+1} = (X-a_k)Q_k - b_k Q_{k-1}.

    Needs a_0..a_{up_to-1} and b_1..b_{up_to-1}; b_0 never enters.  Returns a
    list of low-to-high coefficient arrays.
    """
    a, b = _coeff_arrays(rc)
    if up_to < 0:
        raise ValueError("up_to must be >= 0")
    if up_to > 0 and (len(a) < up_to or len(b) < up_to):
        raise ValueError(
            f"need a_0..a_{up_to - 1} and b_1..b_{up_to - 1} "
            f"to build Q_{up_to}, got {len(a)} and {len(b)} entries"
        )
    polys = [np.array([1.0])]
    if up_to == 0:
        return polys
    polys.append(np.array([-a[0], 1.0]))
    for k in range(1, up_to):
        q = np.zeros(k + 2)
        q[1:] = polys[k]
        q[: k + 1] -= a[k] * polys[k]
        q[: k] -= b[k] * polys[k - 1][: k]
        polys.append(q)
    return polys


def _monic_pair_batch(a, b, deg):
    """Batched (Q_deg, Q_{deg-1}) coefficient rows; dtype follows a."""
    J = a.shape[0]
    dtype = np.result_type(a.dtype, b.dtype)
    qm = np.zeros((J, deg + 1), dtype=dtype)
    q = np.zeros((J, deg + 1), dtype=dtype)
    q[:, 0] = 1.0
    for k in range(deg):
        qn = np.zeros_like(q)
        qn[:, 1 : k + 2] = q[:, : k + 1]
        qn[:, : k + 1] -= a[:, k : k + 1] * q[:, : k + 1]
        if k >= 1:
            qn[:, :k] -= b[:, k : k + 1] * qm[:, :k]
        qm, q = q, qn
    return q, qm[:, :deg] if deg else np.zeros((J, 0), dtype=dtype)


def jacobi_roots(diag, offdiag_b):
    """Roots of the monic polynomial with recursion diagonal ``diag`` and
    weights ``offdiag_b`` (the b_k, of which square roots are taken).

    These are the eigenvalues of the symmetric tridiagonal Jacobi matrix;
    sorted ascending and guaranteed distinct for positive b.
    """
    diag = np.asarray(diag, dtype=float)
    offdiag_b = np.asarray(offdiag_b, dtype=float)
    if diag.ndim != 1 or len(offdiag_b) != len(diag) - 1:
        raise ValueError("need len(offdiag_b) == len(diag) - 1")
    if np.any(offdiag_b <= 0):
        raise ValueError("off-diagonal weights must be positive (cannot symmetrize)")
    if len(diag) == 1:
        return diag.copy()
    return eigh_tridiagonal(diag, np.sqrt(offdiag_b), eigvals_only=True)


def _jacobi_nodes_weights(diag, offdiag_b, total_mass):
    """Golub-Welsch nodes and weights for one Jacobi matrix."""
    diag = np.asarray(diag, dtype=float)
    offdiag_b = np.asarray(offdiag_b, dtype=float)
    if len(diag) == 1:
        return diag.copy(), np.array([total_mass])
    nodes, vecs = eigh_tridiagonal(diag, np.sqrt(offdiag_b))
    return nodes, total_mass * vecs[0] ** 2


def _jacobi_batch(diag, offdiag, want_vectors=False):
    """Stacked symmetric-tridiagonal eigensolve; offdiag entries are the
    already-square-rooted couplings."""
    J, m = diag.shape
    A = np.zeros((J, m, m))
    idx = np.arange(m)
    A[:, idx, idx] = diag
    if m > 1:
        A[:, idx[:-1], idx[1:]] = offdiag
        A[:, idx[1:], idx[:-1]] = offdiag
    if want_vectors:
        return np.linalg.eigh(A)
    return np.linalg.eigvalsh(A)


def gauss_quadrature(m, tol=None):
    """n-point Gauss rule of an even-length (2n) strictly realizable vector.

    The nodes are the zeros of Q_n and the rule reproduces M_0..M_{2n-1}.
    Raises NotRealizableError on realizability failure.
    """
    m = _as_moment_array(m)
    if len(m) % 2:
        raise ValueError("gauss_quadrature expects an even-length moment vector")
    kwargs = {} if tol is None else {"tol": tol}
    a, b = moments_to_recurrence(m, **kwargs)
    n = len(m) // 2
    nodes, weights = _jacobi_nodes_weights(a[:n], b[1:n], m[0])
    return Quadrature(nodes=nodes, weights=weights)


def check_interlacing(inner, outer):
    """Strict interlacing outer_0 < inner_0 < outer_1 < ... < outer_k."""
    inner = np.asarray(inner, dtype=float)
    outer = np.asarray(outer, dtype=float)
    if len(outer) != len(inner) + 1:
        raise ValueError("need len(outer) == len(inner) + 1")
    merged = np.empty(len(inner) + len(outer))
    merged[0::2] = outer
    merged[1::2] = inner
    return bool(np.all(np.diff(merged) > 0))


def vandermonde_weights(nodes, power_sums):
    """Solve sum_i w_i x_i^k = q_k by Bjorck-Pereyra progressive elimination.

    The dual Vandermonde algorithm (Bjorck & Pereyra, Math. Comp. 24, 1970);
    accurate for modest sizes and well-separated nodes.
    """
    x = np.asarray(nodes, dtype=float)
    w = np.array(power_sums, dtype=float)
    if len(x) != len(w):
        raise ValueError("need as many power sums as nodes")
    n = len(x) - 1
    for k in range(n):
        for i in range(n, k, -1):
            w[i] -= x[k] * w[i - 1]
    for k in range(n - 1, -1, -1):
        for i in range(k + 1, n + 1):
            w[i] /= x[i] - x[i - k - 1]
        for i in range(k, n):
            w[i] -= w[i + 1]
    return w
