"""Numerical certification of the structural stability condition.

For the affine-invariant (gamma = 1) closure at an equilibrium state the
certificate checks, at the stated tolerances:

  (I)   the source Jacobian is similar to diag(0_3, -I_{N-2}) through the
        explicit block matrix P^{-1} whose first three columns are
        (Delta_j, rho dU Delta_j, rho/2 dU^2 Delta_j);
  (II)  A_0 A = A^T A_0 for the symmetrizer A_0 = L^T D L, where L collects
        the Horner tails of the characteristic polynomial evaluated at the
        eigenvalues and D carries fixed positive weights;
  (III) K = P^{-T} A_0 P^{-1} is block diagonal (the off-diagonal blocks
        encode the coupling sums over the h_j polynomials).

The diagonal weights of D are computed once at the standard state (U = 0,
theta = 1) from a Vandermonde solve against the standard-normal moments
with the top entry shifted by (n-1)!; the affine scaling law of the
gamma = 1 closure makes the same weights valid at every state.

Positive definiteness of A_0 is certified structurally: A_0 = L^T D L is a
congruence with D positive (explicit weights) and L invertible (distinct
eigenvalues), which is exact-arithmetic sound.  The smallest eigenvalue of
the floating-point A_0 is also reported, but at higher orders A_0 is so
ill-conditioned that this raw number underflows the roundoff floor even
though the matrix is genuinely definite; the certificate therefore gates on
the structural factors plus a non-refutation bound on the Jacobi-equilibrated
spectrum rather than on a raw eigenvalue threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .closures import _hyqmom_factor_rows
from .moments import EquilibriumState, gaussian_moments
from .orthopoly import _jacobi_batch, poly_eval, poly_mul, vandermonde_weights

DEFAULT_TOLERANCES = {
    "condition_I": 1e-9,
    "symmetrizer_asymmetry": 1e-8,
    "commutator": 1e-8,
    "K_offblock": 1e-8,
    "coupling": 1e-8,
    "eigenvalue_gap": 1e-9,
}


@dataclass
class SourceDecomposition:
    """Relaxation-source Jacobian with its block diagonalizer.

    The relaxation rate is normalized to one; the solver reintroduces tau.
    """

    S: np.ndarray
    P_inv: np.ndarray
    similarity_residual: float


@dataclass
class TailPolynomials:
    """Horner tails F_k of the equilibrium characteristic polynomial and the
    coupling polynomials h_j (j = 0, 1, 2), all as low-to-high coefficients."""

    tails: list
    h: list
    char_coeffs: np.ndarray


@dataclass
class StabilityCertificate:
    n: int
    state: EquilibriumState
    D: np.ndarray
    residuals: dict
    conditions: dict
    passed: bool

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)

    def as_dict(self):
        return {
            "n": self.n,
            "state": self.state.as_dict(),
            "D": [float(w) for w in self.D],
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "conditions": dict(self.conditions),
            "passed": bool(self.passed),
        }


def _equilibrium_recurrence(n, U, theta):
    """(a, b) rows of the equilibrium moment vector: a_k = U, b_k = k theta."""
    a = np.full((1, n), float(U))
    b = np.concatenate([[1.0], theta * np.arange(1.0, n + 1)])[None, :]
    return a, b


def _equilibrium_spectrum(n, U, theta, gamma=1.0):
    """Eigenvalues (merged R/Q ordering), characteristic coefficients and
    factors of the closed system at an equilibrium state; all rho-free."""
    a, b = _equilibrium_recurrence(n, U, theta)
    an, qn, qm, rn1 = _hyqmom_factor_rows(a, b, gamma)
    if n == 1:
        qroots = np.array([U])
    else:
        qroots = _jacobi_batch(a, np.sqrt(b[:, 1:n]))[0]
    rdiag = np.concatenate([a, an[:, None]], axis=1)
    roff = np.concatenate(
        [np.sqrt(b[:, 1:n]), np.sqrt((2 * n + gamma) / n * b[:, n:])], axis=1
    )
    rroots = _jacobi_batch(rdiag, roff)[0]
    lam = np.empty(2 * n + 1)
    lam[1::2] = qroots
    lam[0::2] = rroots
    return lam, poly_mul(qn[0], rn1[0]), qn[0], rn1[0]


def source_jacobian(state, n):
    """Source Jacobian S and block diagonalizer P^{-1} at an equilibrium.

    S has zero first three rows (collision invariants); the lower rows carry
    the derivative of rho*Delta_k with respect to (M_0, M_1, M_2) next to
    -I.  The similarity S P^{-1} = P^{-1} diag(0_3, -I) is verified and the
    residual returned.  Requires n >= 2 so the relaxing block is nonempty.
    """
    if n < 2:
        raise ValueError(
            "n >= 2 required: for n < 2 there are no relaxing moments and "
            "conditions (I)/(III) hold trivially"
        )
    N = 2 * n
    rho, U, theta = state.rho, state.U, state.theta
    delta = gaussian_moments(N, U, theta)

    def d1(k):
        return k * delta[k - 1] if k >= 1 else 0.0

    def d2(k):
        return k * (k - 1) * delta[k - 2] if k >= 2 else 0.0

    shat = np.zeros((N - 2, 3))
    for k in range(3, N + 1):
        shat[k - 3, 0] = delta[k] - U * d1(k) + 0.5 * (U**2 - theta) * d2(k)
        shat[k - 3, 1] = d1(k) - U * d2(k)
        shat[k - 3, 2] = 0.5 * d2(k)
    S = np.zeros((N + 1, N + 1))
    S[3:, :3] = shat
    S[3:, 3:] = -np.eye(N - 2)

    P_inv = np.zeros((N + 1, N + 1))
    for j in range(N + 1):
        P_inv[j, 0] = delta[j]
        P_inv[j, 1] = rho * d1(j)
        P_inv[j, 2] = 0.5 * rho * d2(j)
    for i in range(3, N + 1):
        P_inv[i, i] = 1.0
    block = np.zeros(N + 1)
    block[3:] = -1.0
    resid = np.linalg.norm(S @ P_inv - P_inv * block[None, :]) / np.linalg.norm(P_inv)
    return SourceDecomposition(S=S, P_inv=P_inv, similarity_residual=float(resid))


def tail_polynomials(state, n):
    """Tails F_k of the equilibrium characteristic polynomial (gamma = 1)
    and the coupling polynomials h_j = sum_k F_k dU^j Delta_k.

    F_N = 1 and F_{k-1} = X F_k + c_k; h_j truncates at degree N - j.
    """
    N = 2 * n
    _, c, _, _ = _equilibrium_spectrum(n, state.U, state.theta)
    tails = [None] * (N + 1)
    tails[N] = np.array([1.0])
    for k in range(N, 0, -1):
        t = np.zeros(len(tails[k]) + 1)
        t[1:] = tails[k]
        t[0] += c[k]
        tails[k - 1] = t
    delta = gaussian_moments(N, state.U, state.theta)
    h = []
    for j in range(3):
        coeffs = np.zeros(N - j + 1)
        for k in range(N - j + 1):
            acc = 0.0
            for l in range(j, N - k + 1):
                fall = math.factorial(l) // math.factorial(l - j)
                acc += c[l + k + 1] * fall * delta[l - j]
            coeffs[k] = acc
        h.append(coeffs)
    return TailPolynomials(tails=tails, h=h, char_coeffs=c)


def standard_eigenvalues(n, gamma=1.0):
    """Eigenvalues of the closed system at the standard state (U=0, theta=1)."""
    return _equilibrium_spectrum(n, 0.0, 1.0, gamma)[0]


def symmetrizer_weights(n):
    """Positive diagonal of the symmetrizer, computed at the standard state.

    Solves the Vandermonde system sum_i w_i lam_i^k = p_k on the standard
    eigenvalues, where p_k are the standard-normal moments except
    p_2n = Delta_2n + (n-1)!.  The same weights certify every equilibrium
    state thanks to the affine scaling of the gamma = 1 closure.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    lam = standard_eigenvalues(n)
    p = gaussian_moments(2 * n, 0.0, 1.0)
    p[2 * n] += math.factorial(n - 1)
    w = vandermonde_weights(lam, p)
    if np.min(w) <= 0:
        raise RuntimeError(
            "symmetrizer weights came out non-positive; internal error"
        )
    return w


def coupling_residuals(state, n, weights=None, gamma=1.0):
    """Max scaled residual of the coupling sums
    sum_i w_i h_j(lam_i) lam_i^beta over j = 0,1,2 and beta = 0..N-3."""
    N = 2 * n
    lam, c, _, _ = _equilibrium_spectrum(n, state.U, state.theta, gamma)
    tp = tail_polynomials(state, n) if gamma == 1.0 else None
    if gamma == 1.0:
        hpolys = tp.h
    else:
        delta = gaussian_moments(N, state.U, state.theta)
        hpolys = []
        for j in range(3):
            coeffs = np.zeros(N - j + 1)
            for k in range(N - j + 1):
                coeffs[k] = sum(
                    c[l + k + 1]
                    * (math.factorial(l) // math.factorial(l - j))
                    * delta[l - j]
                    for l in range(j, N - k + 1)
                )
            hpolys.append(coeffs)
    w = symmetrizer_weights(n) if weights is None else weights
    worst = 0.0
    for j in range(3):
        hv = poly_eval(hpolys[j], lam)
        for beta in range(N - 2):
            terms = w * hv * lam**beta
            scale = np.sum(np.abs(terms)) + 1e-300
            worst = max(worst, abs(np.sum(terms)) / scale)
    return worst


def certify(state, n, tolerances=None):
    """Build the stability certificate for the gamma = 1 closure at a state.

    Checks conditions (I)-(III) at the module tolerances and returns a
    StabilityCertificate with all residuals; n >= 2 required.
    """
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    N = 2 * n
    src = source_jacobian(state, n)  # validates n >= 2
    lam, c, _, _ = _equilibrium_spectrum(n, state.U, state.theta)
    tp = tail_polynomials(state, n)
    L = np.empty((N + 1, N + 1))
    for k in range(N + 1):
        L[:, k] = poly_eval(tp.tails[k], lam)
    omega = symmetrizer_weights(n)
    A0 = L.T @ (omega[:, None] * L)
    asym = np.linalg.norm(A0 - A0.T) / np.linalg.norm(A0)
    A0 = 0.5 * (A0 + A0.T)

    A = np.zeros((N + 1, N + 1))
    for k in range(N):
        A[k, k + 1] = 1.0
    A[N, :] = -c[: N + 1]
    commutator = np.linalg.norm(A0 @ A - A.T @ A0) / np.linalg.norm(A0)

    K = src.P_inv.T @ A0 @ src.P_inv
    off = max(
        np.linalg.norm(K[:3, 3:]), np.linalg.norm(K[3:, :3])
    ) / np.linalg.norm(K)

    evals = np.linalg.eigvalsh(A0)
    spd_min = float(evals[0])
    dscale = 1.0 / np.sqrt(np.diag(A0))
    evals_eq = np.linalg.eigvalsh(A0 * dscale[:, None] * dscale[None, :])
    spd_min_scaled = float(evals_eq[0] / np.abs(evals_eq).max())

    gap = float(np.min(np.diff(lam)) / np.max(np.abs(lam)))
    coupling = coupling_residuals(state, n, weights=omega)

    residuals = {
        "conditionI_residual": src.similarity_residual,
        "symmetrizer_asymmetry": float(asym),
        "commutator_residual": float(commutator),
        "K_offblock_norm": float(off),
        "coupling_residual": float(coupling),
        "spd_min_eigenvalue": spd_min,
        "spd_min_eigenvalue_scaled": spd_min_scaled,
        "eigenvalue_gap": gap,
        "min_weight": float(np.min(omega)),
    }
    conditions = {
        "I": bool(src.similarity_residual < tol["condition_I"]),
        "II": bool(
            commutator < tol["commutator"] and asym < tol["symmetrizer_asymmetry"]
        ),
        "III": bool(
            off < tol["K_offblock"]
            and coupling < tol["coupling"]
            # structural SPD: positive D, invertible L, plus the scaled
            # spectrum must not refute definiteness beyond roundoff
            and np.min(omega) > 0
            and gap > tol["eigenvalue_gap"]
            and spd_min_scaled > -64 * np.finfo(float).eps
        ),
    }
    return StabilityCertificate(
        n=n,
        state=state,
        D=omega,
        residuals=residuals,
        conditions=conditions,
        passed=all(conditions.values()),
    )


def probe_symmetrizer(state, n, gamma):
    """Experimental search for nonnegative diagonal weights satisfying the
    coupling relations for a general gamma.  Reports what it finds and
    claims nothing: positivity and block-diagonality are proved only for
    gamma = 1.
    """
    from scipy.optimize import nnls

    N = 2 * n
    if n < 2:
        raise ValueError("n >= 2 required")
    lam, c, _, _ = _equilibrium_spectrum(n, state.U, state.theta, gamma)
    delta = gaussian_moments(N, state.U, state.theta)
    rows = []
    for j in range(3):
        coeffs = np.zeros(N - j + 1)
        for k in range(N - j + 1):
            coeffs[k] = sum(
                c[l + k + 1]
                * (math.factorial(l) // math.factorial(l - j))
                * delta[l - j]
                for l in range(j, N - k + 1)
            )
        hv = poly_eval(coeffs, lam)
        for beta in range(N - 2):
            rows.append(hv * lam**beta)
    G = np.array(rows)
    scale = np.max(np.abs(G), axis=1, keepdims=True)
    Gs = G / scale
    system = np.vstack([Gs, np.ones((1, N + 1))])
    target = np.zeros(len(rows) + 1)
    target[-1] = 1.0
    w, _ = nnls(system, target)
    resid = float(np.linalg.norm(Gs @ w))
    return {
        "n": n,
        "gamma": gamma,
        "state": state.as_dict(),
        "weights": [float(x) for x in w],
        "coupling_residual": resid,
        "min_weight": float(np.min(w)),
        "all_positive": bool(np.min(w) > 0),
    }
