"""Realizable moment vectors and their recurrence-coefficient coordinates.

A velocity-moment vector (M_0, ..., M_N) is strictly realizable when the
Hankel matrix built from it is positive definite, i.e. the moments come from
a genuine nonnegative velocity distribution.  On that cone the moments are
in bijection with the three-term recurrence coefficients (a_k, b_k) of the
induced monic orthogonal polynomials, with b_k > 0.  The bijection is
computed with the Wheeler/Chebyshev mixed-moment recursion (see Gautschi,
"Orthogonal Polynomials: Computation and Approximation", 2004), which
exposes the norms <Q_k^2> directly and degrades gracefully near the cone
boundary.

Both directions of the bijection are exponentially ill-conditioned in the
order when expressed in raw moments; supported order is capped at n <= 10
and every realizability check reports a cancellation-loss estimate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# Pivot threshold is relative to M_0 so that the test is invariant under
# rescaling m -> c*m of the whole vector.
DEFAULT_REALIZABILITY_TOL = 1e-12

# Raw-moment recursions lose roughly max|M|*M_0/min_pivot relative digits;
# beyond this order double precision cannot resolve generic inputs.
MAX_HALF_ORDER = 10


class NotRealizableError(ValueError):
    """Moment vector failed the strict-realizability (Hankel pivot) test."""

    def __init__(self, message, pivot_index=None, pivot=None):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.pivot = pivot


@dataclass
class RealizabilityCheck:
    """Outcome of a Hankel positive-definiteness test plus diagnostics."""

    realizable: bool
    pivots: np.ndarray
    failing_index: int | None
    condition_estimate: float
    message: str

    def __bool__(self):
        return self.realizable


@dataclass
class RecurrenceCoefficients:
    """Three-term recurrence coefficients (a_k, b_k); b_k > 0 on the cone.

    For a moment vector of odd length 2n+1 the bijection yields
    a_0..a_{n-1} and b_0..b_n; for even length 2n it yields a_0..a_{n-1}
    and b_0..b_{n-1}.  b_0 equals M_0 and never enters the polynomial
    recursion itself.
    """

    a: np.ndarray
    b: np.ndarray

    def __iter__(self):
        return iter((self.a, self.b))


@dataclass
class EquilibriumState:
    """Maxwellian parameters (rho, U, theta) with rho > 0, theta > 0."""

    rho: float
    U: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.rho) and np.isfinite(self.U) and np.isfinite(self.theta)):
            raise ValueError("equilibrium state entries must be finite")
        if self.rho <= 0:
            raise ValueError(f"density must be positive, got {self.rho}")
        if self.theta <= 0:
            raise ValueError(f"temperature must be positive, got {self.theta}")

    @classmethod
    def from_moments(cls, m):
        m = np.asarray(m, dtype=float)
        if m.size < 3:
            raise ValueError("need at least (M_0, M_1, M_2) to define a state")
        rho = m[0]
        if rho <= 0:
            raise ValueError("M_0 must be positive")
        U = m[1] / rho
        theta = (rho * m[2] - m[1] ** 2) / rho**2
        return cls(rho=float(rho), U=float(U), theta=float(theta))

    def moments(self, order):
        """Maxwellian moment vector rho * Delta_k(U, theta), k = 0..order."""
        return self.rho * gaussian_moments(order, self.U, self.theta)

    def as_dict(self):
        return {"rho": self.rho, "U": self.U, "theta": self.theta}


def _as_moment_array(m, dtype=float):
    m = np.asarray(m, dtype=dtype)
    if m.ndim != 1 or m.size == 0:
        raise ValueError("moment vector must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(m)):
        raise ValueError("moment vector contains non-finite entries")
    return m


def _half_order(length):
    """n such that length == 2n+1 (odd) or length == 2n (even)."""
    n = (length - 1) // 2 if length % 2 else length // 2
    if n > MAX_HALF_ORDER:
        raise ValueError(
            f"moment order n={n} exceeds the supported cap n={MAX_HALF_ORDER} "
            "(double precision cannot resolve the raw-moment bijection beyond it)"
        )
    return n


def hankel_matrix(m, size=None):
    """Hankel matrix H[i, j] = M_{i+j} of the given order (n+1 x n+1)."""
    m = _as_moment_array(m)
    if size is None:
        size = (len(m) + 1) // 2
    if 2 * size - 1 > len(m):
        raise ValueError("not enough moments for the requested Hankel order")
    return np.array([[m[i + j] for j in range(size)] for i in range(size)])


def is_strictly_realizable(m, tol=DEFAULT_REALIZABILITY_TOL):
    """Test positive definiteness of the Hankel matrix of ``m``.

    Odd length 2n+1 tests H_n; even length 2n tests H_{n-1} (the trailing
    odd moment is unconstrained).  The test runs an LDL^T factorization and
    requires every pivot to exceed ``tol * M_0``; the pivots are the norms
    <Q_k^2> of the induced orthogonal polynomials.

    Returns a RealizabilityCheck that is truthy iff the test passed.
    """
    m = _as_moment_array(m)
    n = _half_order(len(m))
    size = n + 1 if len(m) % 2 else n
    if size == 0:  # length-1 even case cannot occur; guard length 2: H_0
        size = 1
    H = hankel_matrix(m, size)
    pivots = np.full(size, np.nan)
    threshold = tol * m[0]
    L = np.eye(size)
    failing = None
    for i in range(size):
        d = H[i, i] - np.dot(L[i, :i] ** 2, pivots[:i])
        pivots[i] = d
        if not (d > threshold) or not np.isfinite(d):
            failing = i
            break
        for r in range(i + 1, size):
            L[r, i] = (H[r, i] - np.dot(L[r, :i] * L[i, :i], pivots[:i])) / d
    valid = pivots[: failing if failing is not None else size]
    if valid.size and np.min(valid) > 0:
        cond = float(np.max(np.abs(m)) * m[0] / np.min(valid))
    else:
        cond = np.inf
    if failing is None:
        return RealizabilityCheck(True, pivots, None, cond, "all pivots positive")
    return RealizabilityCheck(
        False,
        pivots,
        failing,
        cond,
        f"pivot {failing} = {float(pivots[failing])!r} not above {float(threshold)!r}",
    )


def gaussian_moments(order, U, theta):
    """Moments Delta_0..Delta_order of the Gaussian with mean U, variance theta.

    Computed by the recursion Delta_{k+1} = U Delta_k + k theta Delta_{k-1},
    which is exact in floating point for small orders (no factorial sums).
    ``U`` and ``theta`` may be arrays; the moment axis comes last.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    U = np.asarray(U, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("theta must be positive")
    shape = np.broadcast_shapes(U.shape, theta.shape)
    out = np.zeros(shape + (order + 1,))
    out[..., 0] = 1.0
    if order >= 1:
        out[..., 1] = U
    for k in range(1, order):
        out[..., k + 1] = U * out[..., k] + k * theta * out[..., k - 1]
    return out if shape else out.reshape(order + 1)


def gaussian_moment(k, U, theta):
    """Single Gaussian moment Delta_k(U, theta)."""
    return float(gaussian_moments(k, U, theta)[..., k])


def gaussian_moment_u_derivative(k, j, U, theta):
    """j-th derivative of Delta_k with respect to the mean velocity.

    Equals k!/(k-j)! * Delta_{k-j}(U, theta); zero when j > k.
    """
    if j < 0 or k < 0:
        raise ValueError("orders must be nonnegative")
    if theta <= 0:
        raise ValueError("theta must be positive")
    if j > k:
        return 0.0
    return math.factorial(k) // math.factorial(k - j) * gaussian_moment(k - j, U, theta)


def maxwellian_moments(rho, U, theta, order):
    """Equilibrium moment vector rho * Delta_k(U, theta), k = 0..order."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    return rho * gaussian_moments(order, U, theta)


def affine_transform(m, u, sigma):
    """Shift/scale operator on moments: Mbar_k = sum_j C(k,j) sigma^j M_j u^{k-j}.

    Realizes the change of velocity variable xi -> sigma*xi + u; invertible
    with parameters (-u/sigma, 1/sigma).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    m = _as_moment_array(m)
    out = np.zeros_like(m)
    sig_pow = sigma ** np.arange(len(m))
    for k in range(len(m)):
        acc = 0.0
        for j in range(k + 1):
            acc += math.comb(k, j) * sig_pow[j] * m[j] * u ** (k - j)
        out[k] = acc
    return out


def _wheeler_batch(M):
    """Mixed-moment (Wheeler) recursion on a batch of moment rows.

    Returns (a, b, pivots) with shapes (J, n_a), (J, n_b), (J, n_b) where the
    pivots are the norms <Q_k^2>.  No realizability enforcement here; callers
    inspect the pivots.  dtype follows the input (complex inputs supported,
    which is what derivative probes rely on).
    """
    M = np.asarray(M)
    J, L = M.shape
    n = (L - 1) // 2 if L % 2 else L // 2
    n_a = n
    n_b = n + 1 if L % 2 else n
    prev = np.zeros_like(M)
    cur = M.copy()
    a = np.zeros((J, max(n_a, 1)), dtype=M.dtype)
    b = np.zeros((J, n_b), dtype=M.dtype)
    piv = np.zeros((J, n_b), dtype=M.dtype)
    if n_a:
        a[:, 0] = M[:, 1] / M[:, 0]
    b[:, 0] = M[:, 0]
    piv[:, 0] = M[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(1, n_b):
            nxt = np.zeros_like(M)
            lo, hi = k, L - k
            nxt[:, lo:hi] = (
                cur[:, lo + 1 : hi + 1]
                - a[:, k - 1 : k] * cur[:, lo:hi]
                - b[:, k - 1 : k] * prev[:, lo:hi]
            )
            piv[:, k] = nxt[:, k]
            b[:, k] = nxt[:, k] / cur[:, k - 1]
            if k < n_a:
                a[:, k] = nxt[:, k + 1] / nxt[:, k] - cur[:, k] / cur[:, k - 1]
            prev, cur = cur, nxt
    return a[:, :n_a], b, piv


def _realizable_pivots_batch(M, tol=DEFAULT_REALIZABILITY_TOL):
    """Batched strict-realizability mask from the Wheeler pivots."""
    a, b, piv = _wheeler_batch(M)
    ok = np.all(piv.real > tol * M[:, :1].real, axis=1) & np.all(
        np.isfinite(M), axis=1
    )
    return ok, a, b, piv


def moments_to_recurrence(m, tol=DEFAULT_REALIZABILITY_TOL):
    """Map a strictly realizable moment vector to (a_k, b_k).

    Raises NotRealizableError (carrying the failing pivot index) when some
    norm <Q_k^2> is not above tol * M_0.
    """
    m = _as_moment_array(m)
    _half_order(len(m))
    a, b, piv = _wheeler_batch(m[None, :])
    a, b, piv = a[0], b[0], piv[0]
    bad = np.flatnonzero(~(piv > tol * m[0]))
    if bad.size:
        k = int(bad[0])
        raise NotRealizableError(
            f"moment vector is not strictly realizable: pivot {k} = "
            f"{float(piv[k])!r} not above {float(tol * m[0])!r}",
            pivot_index=k,
            pivot=float(piv[k]),
        )
    return RecurrenceCoefficients(a=a, b=b)


def _coeff_arrays(rc):
    if isinstance(rc, RecurrenceCoefficients):
        return np.asarray(rc.a, dtype=float), np.asarray(rc.b, dtype=float)
    a, b = rc
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def _moments_from_recurrence_batch(a, b, length):
    """Forward sweep of the mixed moments sigma(k, l) = <Q_k X^l>.

    Runs diagonal by diagonal on sigma(k, k+d) so every entry only needs
    already-computed values; sigma(k, k) is the pivot product b_0..b_k.
    """
    J = a.shape[0]
    Lm = length - 1
    R = Lm // 2
    T = np.zeros((J, R + 2, length))
    cp = np.cumprod(b[:, : R + 1], axis=1)
    for k in range(R + 1):
        T[:, k, k] = cp[:, k]
    for d in range(1, Lm + 1):
        for k in range(R + 1):
            if d > Lm - 2 * k:
                continue
            t = T[:, k + 1, k + d - 1] + a[:, k] * T[:, k, k + d - 1]
            if k >= 1:
                t = t + b[:, k] * T[:, k - 1, k + d - 1]
            T[:, k, k + d] = t
    return T[:, 0, :]


def recurrence_to_moments(rc, length):
    """Unique moment vector M_0..M_{length-1} with the given (a_k, b_k).

    Needs a_0..a_{ceil((length-1)/2)-1} and b_0..b_{(length-1)//2}, all
    b_k > 0.  This is the generator of random strictly realizable vectors:
    any admissible (a, b) yields a realizable output by construction.
    """
    a, b = _coeff_arrays(rc)
    if length < 1:
        raise ValueError("length must be >= 1")
    _half_order(length)
    Lm = length - 1
    need_a = (Lm + 1) // 2
    need_b = Lm // 2 + 1
    if len(a) < need_a or len(b) < need_b:
        raise ValueError(
            f"need {need_a} a-coefficients and {need_b} b-coefficients "
            f"for {length} moments, got {len(a)} and {len(b)}"
        )
    if np.any(b[:need_b] <= 0):
        raise ValueError("all b coefficients must be positive")
    if need_a == 0:
        a = np.zeros(1)
    return _moments_from_recurrence_batch(a[None, :], b[None, :], length)[0]


# ---------------------------------------------------------------------------
# Serialization: JSON arrays and single-line CSV rows, shortest round-trip
# decimal formatting so files reproduce bit-identically across platforms.

def moments_to_json(m):
    return json.dumps([float(x) for x in _as_moment_array(m)])


def moments_from_json(text):
    return _as_moment_array(json.loads(text))


def moments_to_csv_row(m):
    return ",".join(repr(float(x)) for x in _as_moment_array(m))


def moments_from_csv_row(row):
    return _as_moment_array([float(tok) for tok in row.strip().split(",")])
