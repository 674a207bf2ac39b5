"""Moment closures and the spectral structure of the closed systems.

Supported closures for the first unclosed moment:

* ``qmom``      -- n-point delta reconstruction of an even-length vector;
                   places the augmented vector on the cone boundary
                   (<Q_n^2> = 0).  The closed system is degenerate: every
                   characteristic root has multiplicity two.
* ``hyqmom``    -- fixes the next recurrence coefficient of an odd-length
                   vector as a_n = (gamma/n) * sum(a_0..a_{n-1}); strictly
                   hyperbolic for gamma > -2n, with positive eigenvalue
                   weights for gamma > -n.  gamma = 1 is the affine-invariant
                   member.
* ``new``       -- closes an even-length vector through the polynomial
                   Q_n^2 - Q_{n-1}^2, giving 2n distinct characteristic
                   roots while staying a pure moment functional.
* ``polynomial`` -- user-supplied monic polynomial G(X; M); the closure is
                   M_{N+1} = <X^{N+1} - G>.  G is the characteristic
                   polynomial of the closed system iff <dG/dM> = 0, which is
                   validated numerically.

The characteristic polynomial of the hyqmom system factorizes as
Q_n * R_{n+1} with R_{n+1} = (X - a_n) Q_n - ((2n+gamma)/n) b_n Q_{n-1};
the system eigenvalues are the merged, interlacing roots of the two factors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .moments import (
    NotRealizableError,
    _as_moment_array,
    _realizable_pivots_batch,
    _wheeler_batch,
    affine_transform,
    moments_to_recurrence,
)
from .orthopoly import (
    NEAR_DEGENERACY_RTOL,
    _jacobi_batch,
    _jacobi_nodes_weights,
    _monic_pair_batch,
    poly_mul,
)

VARIANTS = ("qmom", "hyqmom", "new", "polynomial")


class InconsistentClosureError(ValueError):
    """Supplied closure polynomial violates the <dG/dM> = 0 criterion."""


@dataclass
class ClosureSpec:
    variant: str = "hyqmom"
    gamma: float = 1.0
    builder: object = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown closure variant {self.variant!r}")
        if not np.isfinite(self.gamma):
            raise ValueError("gamma must be finite")
        if self.variant == "polynomial" and not callable(self.builder):
            raise ValueError("polynomial closure needs a callable builder")


def hyqmom_closure(gamma=1.0):
    return ClosureSpec("hyqmom", gamma=gamma)


def qmom_closure():
    return ClosureSpec("qmom")


def new_hyperbolic_closure():
    return ClosureSpec("new")


def polynomial_closure(builder):
    return ClosureSpec("polynomial", builder=builder)


@dataclass
class CharacteristicPolynomial:
    """Monic characteristic coefficients (low-to-high) plus exposed factors."""

    c: np.ndarray
    factors: dict


@dataclass
class SpectralDecomposition:
    """Eigenstructure of a closed hyqmom system.

    Eigenvalues follow the canonical merged-union ordering: roots of
    R_{n+1} at even indices, roots of Q_n at odd indices; strict interlacing
    makes the sequence strictly increasing.  The weights solve the
    Vandermonde moment system sum_i omega_i lambda_i^k = M_k, k <= 2n.
    """

    c: np.ndarray
    eigenvalues: np.ndarray
    weights: np.ndarray
    factors: dict
    gamma: float
    weights_positive: bool = True
    near_degenerate: bool = False

    def to_json(self):
        return json.dumps(
            {
                "c": [float(x) for x in self.c],
                "lambda": [float(x) for x in self.eigenvalues],
                "omega": [float(x) for x in self.weights],
                "factors": {
                    "Qn": [float(x) for x in self.factors["Qn"]],
                    "Rn1": [float(x) for x in self.factors["Rn1"]],
                },
            }
        )


def _check_gamma(gamma, n):
    if gamma <= -2 * n:
        raise ValueError(f"gamma must exceed -2n = {-2 * n}, got {gamma}")


def _odd_input(m):
    m = _as_moment_array(m)
    if len(m) % 2 == 0 or len(m) < 3:
        raise ValueError("hyqmom closures take an odd-length vector (M_0..M_2n), n >= 1")
    return m


def _even_input(m):
    m = _as_moment_array(m)
    if len(m) % 2 or len(m) < 2:
        raise ValueError("this closure takes an even-length vector (M_0..M_{2n-1}), n >= 1")
    return m


def _hyqmom_factor_rows(a, b, gamma):
    """Batched (a_n, Qn, Qn-1, Rn1) for odd-length inputs; dtype generic."""
    n = a.shape[1]
    an = gamma / n * np.sum(a, axis=1)
    qn, qm = _monic_pair_batch(a, b, n)
    rn1 = np.zeros((a.shape[0], n + 2), dtype=qn.dtype)
    rn1[:, 1:] = qn
    rn1[:, : n + 1] -= an[:, None] * qn
    rn1[:, :n] -= ((2 * n + gamma) / n) * b[:, n:] * qm
    return an, qn, qm, rn1


def _close_hyqmom_batch(M, gamma):
    """Closed moments for a batch of odd-length rows; no validation.

    Uses the linear identity M_{2n+1} = <X^{2n+1} - (X - a_n) Q_n^2>, i.e.
    the expansion of <X Q_n^2> = a_n <Q_n^2> in raw moments.
    """
    a, b, _ = _wheeler_batch(M)
    n = a.shape[1]
    an = gamma / n * np.sum(a, axis=1)
    qn, _ = _monic_pair_batch(a, b, n)
    q2 = np.zeros((M.shape[0], 2 * n + 1), dtype=qn.dtype)
    for i in range(n + 1):
        q2[:, i : i + n + 1] += qn[:, i : i + 1] * qn
    xq2 = np.zeros((M.shape[0], 2 * n + 2), dtype=q2.dtype)
    xq2[:, 1:] = q2
    xq2[:, : 2 * n + 1] -= an[:, None] * q2
    return -np.sum(xq2[:, : 2 * n + 1] * M, axis=1)


def close_hyqmom(m, gamma=1.0):
    """HyQMOM closure of (M_0..M_2n): the unique M_{2n+1} whose induced
    a_n equals (gamma/n) * sum(a_0..a_{n-1})."""
    m = _odd_input(m)
    n = len(m) // 2
    _check_gamma(gamma, n)
    moments_to_recurrence(m)
    return float(_close_hyqmom_batch(m[None, :], gamma)[0])


def close_qmom(m):
    """QMOM closure of (M_0..M_{2n-1}): M_2n = <X^2n - Q_n^2>, the boundary
    value that makes <Q_n^2> of the augmented vector vanish."""
    m = _even_input(m)
    a, b = moments_to_recurrence(m)
    n = len(m) // 2
    qn, _ = _monic_pair_batch(a[None, :], b[None, :], n)
    q2 = poly_mul(qn[0], qn[0])
    return float(-np.dot(q2[: 2 * n], m))


def close_new(m):
    """Strictly hyperbolic even-length closure M_2n = <X^2n - Q_n^2 + Q_{n-1}^2>."""
    m = _even_input(m)
    _, b = moments_to_recurrence(m)
    n = len(m) // 2
    return close_qmom(m) + float(np.prod(b[:n]))


def close(m, spec):
    """Dispatch the closure named by ``spec`` on ``m``."""
    if spec.variant == "hyqmom":
        return close_hyqmom(m, spec.gamma)
    if spec.variant == "qmom":
        return close_qmom(m)
    if spec.variant == "new":
        return close_new(m)
    m = _as_moment_array(m)
    moments_to_recurrence(m)
    g = _validated_builder_poly(m, spec.builder)
    return float(-np.dot(g[:-1], m))


def _ladder_scales(m):
    """Per-component magnitude floor M_0 * V^j for derivative step sizes."""
    v = abs(m[1] / m[0]) + (np.sqrt(m[2] / m[0]) if len(m) >= 3 else 1.0)
    v = max(v, 1e-6)
    return np.maximum(np.abs(m), m[0] * v ** np.arange(len(m)))


def _validated_builder_poly(m, builder, tol=1e-6):
    """Check the polynomial-closure criterion <dG/dM> = 0 by central
    differences of the builder's coefficients; the finite-difference floor
    in double precision sets the default tolerance."""
    g = np.asarray(builder(m), dtype=float)
    if len(g) != len(m) + 1 or abs(g[-1] - 1.0) > 1e-12:
        raise InconsistentClosureError(
            "builder must return a monic polynomial of degree len(m)"
        )
    scales = _ladder_scales(m)
    worst = 0.0
    for j in range(len(m)):
        h = 1e-6 * scales[j]
        mp = m.copy()
        mp[j] += h
        mm = m.copy()
        mm[j] -= h
        dg = (np.asarray(builder(mp), float) - np.asarray(builder(mm), float)) / (2 * h)
        resid = np.dot(dg[:-1], m)
        scale = np.sum(np.abs(dg[:-1]) * np.abs(m)) + scales[min(j + 1, len(m) - 1)]
        worst = max(worst, abs(resid) / scale)
    if worst > tol:
        raise InconsistentClosureError(
            f"<dG/dM> residual {worst:.3e} exceeds {tol:.1e}: supplied polynomial "
            "is not the characteristic polynomial of its own closure"
        )
    return g


def characteristic_polynomial(m, spec):
    """Characteristic polynomial of the closed system, with factors exposed.

    hyqmom: Q_n * R_{n+1}; qmom: Q_n^2; new: Q_n^2 - Q_{n-1}^2;
    polynomial: the validated G itself.
    """
    if spec.variant == "hyqmom":
        m = _odd_input(m)
        n = len(m) // 2
        _check_gamma(spec.gamma, n)
        a, b = moments_to_recurrence(m)
        _, qn, _, rn1 = _hyqmom_factor_rows(a[None, :], b[None, :], spec.gamma)
        return CharacteristicPolynomial(
            c=poly_mul(qn[0], rn1[0]), factors={"Qn": qn[0], "Rn1": rn1[0]}
        )
    if spec.variant == "qmom":
        m = _even_input(m)
        a, b = moments_to_recurrence(m)
        n = len(m) // 2
        qn, _ = _monic_pair_batch(a[None, :], b[None, :], n)
        return CharacteristicPolynomial(
            c=poly_mul(qn[0], qn[0]), factors={"Qn": qn[0]}
        )
    if spec.variant == "new":
        m = _even_input(m)
        a, b = moments_to_recurrence(m)
        n = len(m) // 2
        qn, qm = _monic_pair_batch(a[None, :], b[None, :], n)
        c = poly_mul(qn[0], qn[0])
        c[: 2 * n - 1] -= poly_mul(qm[0], qm[0])
        return CharacteristicPolynomial(c=c, factors={"Qn": qn[0], "Qn_minus_1": qm[0]})
    m = _as_moment_array(m)
    moments_to_recurrence(m)
    g = _validated_builder_poly(m, spec.builder)
    return CharacteristicPolynomial(c=g, factors={})


def jacobian_matrix(m, spec):
    """Coefficient matrix of the closed system: companion form with the
    shift on the superdiagonal and -c_0..-c_N in the last row."""
    cp = characteristic_polynomial(m, spec)
    N1 = len(cp.c) - 1
    A = np.zeros((N1, N1))
    for k in range(N1 - 1):
        A[k, k + 1] = 1.0
    A[N1 - 1, :] = -cp.c[:N1]
    return A


def _spectral_batch(M, gamma, tol=None):
    """Batched merged eigenstructure of hyqmom systems.

    Eigenvalues: stacked tridiagonal eigensolves of the Q_n Jacobi matrix
    and of the same matrix extended by one row (diagonal a_n, off-diagonal
    sqrt(((2n+gamma)/n) b_n)), which is the modified-final-row form of
    R_{n+1}.  Weights: the unique Vandermonde solution assembled from the
    two Golub-Welsch rules,

        omega_odd  = (n+gamma)/(2n+gamma) * w'   (Q_n rule)
        omega_even = n/(2n+gamma) * w''          (R_{n+1} rule)

    so positivity for gamma > -n is structural rather than numerical.
    """
    kwargs = {} if tol is None else {"tol": tol}
    ok, a, b, piv = _realizable_pivots_batch(M, **kwargs)
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise NotRealizableError(
            f"row {bad} of the batch is not strictly realizable", pivot_index=bad
        )
    J, L = M.shape
    n = L // 2
    an = gamma / n * np.sum(a, axis=1)
    if n == 1:
        qroots = a.copy()
        wq = b[:, :1].copy()
    else:
        qroots, qvecs = _jacobi_batch(a, np.sqrt(b[:, 1:n]), want_vectors=True)
        wq = b[:, :1] * qvecs[:, 0, :] ** 2
    rdiag = np.concatenate([a, an[:, None]], axis=1)
    roff = np.concatenate(
        [np.sqrt(b[:, 1:n]), np.sqrt((2 * n + gamma) / n * b[:, n:])], axis=1
    )
    rroots, rvecs = _jacobi_batch(rdiag, roff, want_vectors=True)
    wr = b[:, :1] * rvecs[:, 0, :] ** 2
    lam = np.empty((J, 2 * n + 1))
    om = np.empty((J, 2 * n + 1))
    lam[:, 1::2] = qroots
    lam[:, 0::2] = rroots
    om[:, 1::2] = (n + gamma) / (2 * n + gamma) * wq
    om[:, 0::2] = n / (2 * n + gamma) * wr
    return lam, om, qroots, rroots


def spectral_decomposition(m, spec):
    """Full eigenstructure (characteristic coefficients, eigenvalues,
    weights, factors) of a closed hyqmom system."""
    if spec.variant != "hyqmom":
        raise ValueError(
            "spectral_decomposition is defined for the hyqmom closure; "
            "other variants expose only their characteristic polynomial"
        )
    m = _odd_input(m)
    n = len(m) // 2
    _check_gamma(spec.gamma, n)
    cp = characteristic_polynomial(m, spec)
    lam, om, qroots, rroots = _spectral_batch(m[None, :], spec.gamma)
    lam, om = lam[0], om[0]
    if not np.all(np.diff(lam) > 0):
        raise RuntimeError(
            "interlacing of Q_n and R_{n+1} roots failed; input sits on the "
            "realizability boundary or an internal invariant is broken"
        )
    positive = bool(np.min(om) > 0)
    if spec.gamma > -n and not positive:
        raise RuntimeError(
            "eigenvalue weights must be positive for gamma > -n; "
            "internal consistency violated"
        )
    radius = np.max(np.abs(lam))
    near = bool(np.min(np.diff(lam)) < NEAR_DEGENERACY_RTOL * radius)
    return SpectralDecomposition(
        c=cp.c,
        eigenvalues=lam,
        weights=om,
        factors=cp.factors,
        gamma=spec.gamma,
        weights_positive=positive,
        near_degenerate=near,
    )


def verify_affine_invariance(m, spec, u, sigma):
    """Relative commutation defect of the closure with the shift/scale
    operator: ||close(S m) - S(close(m))|| / ||S(close(m))||.

    Vanishes (to rounding) for the hyqmom closure iff gamma = 1, and for
    the qmom closure identically.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    m = _as_moment_array(m)
    closed = np.append(m, close(m, spec))
    transformed = affine_transform(m, u, sigma)
    lhs = np.append(transformed, close(transformed, spec))
    rhs = affine_transform(closed, u, sigma)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
