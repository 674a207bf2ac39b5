"""Realizable moments, the recurrence bijection, and Gauss quadrature.

A moment vector (M_0, ..., M_N) of a velocity distribution is strictly
realizable when its Hankel matrix is positive definite.  On that cone the
moments are equivalent to recurrence coefficients (a_k, b_k) with b_k > 0,
which is also the cleanest way to *generate* realizable vectors: pick any
admissible coefficients and map them back.
"""

import numpy as np

import hyqmom as hq

# --- realizability is a pivot test -----------------------------------------
print("Standard normal moments (1, 0, 1, 0, 3):")
check = hq.is_strictly_realizable([1, 0, 1, 0, 3])
print(f"  realizable: {bool(check)}, pivots = {check.pivots}")

print("Tampered vector (1, 0, 1, 0, 1):")
check = hq.is_strictly_realizable([1, 0, 1, 0, 1])
print(f"  realizable: {bool(check)} ({check.message})")

# --- the bijection with recurrence coefficients ----------------------------
m = [1, 0, 1, 0, 3]
rc = hq.moments_to_recurrence(m)
print(f"\nRecurrence coefficients of {m}: a = {rc.a}, b = {rc.b}")
print(f"  (a_k = 0, b_k = k is the standard-normal signature, b_0 = M_0)")
print(f"Round trip: {hq.recurrence_to_moments(rc, 5)}")

# generating a random realizable vector never needs rejection sampling
rng = np.random.default_rng(1)
a = rng.uniform(-2, 2, 3)
b = rng.uniform(0.5, 3, 4)
m_rand = hq.recurrence_to_moments((a, b), 7)
print(f"\nRandom coefficients a={np.round(a, 3)}, b={np.round(b, 3)}")
print(f"  -> moments {np.round(m_rand, 4)}")
print(f"  -> strictly realizable: {bool(hq.is_strictly_realizable(m_rand))}")

# --- Gaussian moments and the affine operator ------------------------------
print(f"\nGaussian moments Delta_k(U=0.5, theta=2), k<=4:")
print(f"  {hq.gaussian_moments(4, 0.5, 2.0)}")
shifted = hq.affine_transform([1, 0, 1, 0, 3], 0.5, np.sqrt(2.0))
print(f"Affine image of the standard moments under (u, sigma) = (0.5, sqrt 2):")
print(f"  {shifted}   (same thing)")

# --- Gauss quadrature from moments ------------------------------------------
m6 = [1, 0, 1, 0, 3, 0]
q = hq.gauss_quadrature(m6)
print(f"\n3-point Gauss rule of {m6}:")
print(f"  nodes   = {q.nodes}")
print(f"  weights = {q.weights}")
print("  reproduces the first 6 moments:")
for k in range(6):
    print(f"    order {k}: {q.power_sum(k):+.12f}  (target {m6[k]})")
