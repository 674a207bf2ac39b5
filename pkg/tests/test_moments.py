import math

import numpy as np
import pytest
from scipy.integrate import quad

import hyqmom as hq
from corpus import random_coefficients, random_odd_moments


class TestRealizability:
    def test_standard_normal_moments_realizable(self):
        check = hq.is_strictly_realizable([1, 0, 1, 0, 3])
        assert check
        assert np.allclose(check.pivots, [1, 1, 2])

    def test_flat_even_moments_not_realizable(self):
        # oracle: leading principal minors of the Hankel matrix
        m = [1, 0, 1, 0, 1]
        H = hq.hankel_matrix(m)
        minors = [np.linalg.det(H[: k + 1, : k + 1]) for k in range(3)]
        assert min(minors) <= 0
        assert not hq.is_strictly_realizable(m)

    def test_zero_variance_not_realizable(self):
        check = hq.is_strictly_realizable([1, 1, 1])
        assert not check
        assert check.failing_index == 1

    def test_even_length_ignores_last_moment(self):
        # H_{n-1} only involves M_0..M_{2n-2}
        assert hq.is_strictly_realizable([1, 0, 1, -123.0])
        assert hq.is_strictly_realizable([1, 0, 1, 123.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            hq.is_strictly_realizable([1.0, np.nan, 1.0])
        with pytest.raises(ValueError):
            hq.is_strictly_realizable([1.0, np.inf, 1.0])

    def test_scale_invariance(self, rng):
        m = random_odd_moments(rng, 3)[0]
        for c in (1e-8, 1.0, 1e8):
            assert hq.is_strictly_realizable(c * m)

    def test_cone_property(self, rng):
        # positive combinations of realizable vectors stay realizable
        for _ in range(50):
            m1 = random_odd_moments(rng, 3)[0]
            m2 = random_odd_moments(rng, 3)[0]
            al, be = rng.uniform(0.1, 5, 2)
            assert hq.is_strictly_realizable(al * m1 + be * m2)

    def test_order_cap(self):
        with pytest.raises(ValueError, match="cap"):
            hq.is_strictly_realizable(np.ones(25))


class TestGaussianMoments:
    def test_standard_fourth_moment(self):
        assert hq.gaussian_moment(4, 0, 1) == 3.0

    def test_third_moment_symbolic(self, rng):
        # oracle: symbolic expansion of int xi^3 phi(xi - U) dxi
        for _ in range(10):
            U = rng.uniform(-3, 3)
            th = rng.uniform(0.1, 4)
            assert hq.gaussian_moment(3, U, th) == pytest.approx(U**3 + 3 * U * th)

    def test_quadrature_spot_check(self):
        U, th = 0.7, 1.3
        for k in range(6):
            val, _ = quad(
                lambda x: x**k * np.exp(-((x - U) ** 2) / (2 * th)) / np.sqrt(2 * np.pi * th),
                -30,
                30,
            )
            assert hq.gaussian_moment(k, U, th) == pytest.approx(val, rel=1e-9)

    def test_normalization(self):
        assert hq.gaussian_moment(0, 2, 5) == 1.0

    def test_domain_error(self):
        with pytest.raises(ValueError):
            hq.gaussian_moment(2, 0.0, 0.0)
        with pytest.raises(ValueError):
            hq.gaussian_moment(2, 0.0, -1.0)

    def test_vector_broadcast(self):
        out = hq.gaussian_moments(4, np.array([0.0, 1.0]), np.array([1.0, 2.0]))
        assert out.shape == (2, 5)
        assert out[0, 4] == 3.0


class TestGaussianMomentDerivative:
    def test_odd_values_vanish_at_center(self):
        assert hq.gaussian_moment_u_derivative(2, 1, 0, 1) == 0.0
        assert hq.gaussian_moment_u_derivative(3, 2, 0, 1) == 0.0

    def test_second_derivative_of_fourth(self):
        # oracle: central finite difference of the moment in U
        h = 1e-4
        fd = (
            hq.gaussian_moment(4, h, 1) - 2 * hq.gaussian_moment(4, 0, 1) + hq.gaussian_moment(4, -h, 1)
        ) / h**2
        val = hq.gaussian_moment_u_derivative(4, 2, 0, 1)
        assert val == 12.0
        assert fd == pytest.approx(val, abs=1e-4)

    def test_matches_central_differences(self, rng):
        for _ in range(20):
            k = int(rng.integers(1, 8))
            U = rng.uniform(-2, 2)
            th = rng.uniform(0.2, 3)
            h = 1e-5 * max(1.0, abs(U))
            fd = (hq.gaussian_moment(k, U + h, th) - hq.gaussian_moment(k, U - h, th)) / (2 * h)
            val = hq.gaussian_moment_u_derivative(k, 1, U, th)
            assert fd == pytest.approx(val, rel=1e-7, abs=1e-7)

    def test_above_order_returns_zero(self):
        assert hq.gaussian_moment_u_derivative(2, 5, 0.3, 1.2) == 0.0


class TestAffineTransform:
    def test_unit_gaussian_shift_scale(self, rng):
        u, s = rng.uniform(-3, 3), rng.uniform(0.2, 3)
        out = hq.affine_transform([1, 0, 1], u, s)
        assert np.allclose(out, [1, u, s**2 + u**2])

    def test_identity(self, rng):
        m = random_odd_moments(rng, 2)[0]
        assert np.array_equal(hq.affine_transform(m, 0.0, 1.0), m)

    def test_pure_scaling(self):
        # oracle: direct binomial sum with u = 0 reduces to sigma^k M_k
        m = np.array([1.0, 0.0, 1.0, 0.0, 3.0])
        expected = [2.0**k * m[k] for k in range(5)]
        assert np.allclose(hq.affine_transform(m, 0.0, 2.0), expected)
        assert np.allclose(expected, [1, 0, 4, 0, 48])

    def test_binomial_sum_oracle(self, rng):
        m = random_odd_moments(rng, 3)[0]
        u, s = 1.3, 0.7
        out = hq.affine_transform(m, u, s)
        for k in range(len(m)):
            acc = sum(math.comb(k, j) * s**j * m[j] * u ** (k - j) for j in range(k + 1))
            assert out[k] == pytest.approx(acc, rel=1e-14)

    def test_group_law(self, rng):
        m = random_odd_moments(rng, 3)[0]
        u1, s1, u2, s2 = 0.5, 1.2, -1.1, 0.6
        once = hq.affine_transform(hq.affine_transform(m, u1, s1), u2, s2)
        composed = hq.affine_transform(m, u2 + s2 * u1, s2 * s1)
        assert np.allclose(once, composed, rtol=1e-13)

    def test_inverse(self, rng):
        m = random_odd_moments(rng, 3)[0]
        u, s = 0.9, 1.7
        back = hq.affine_transform(hq.affine_transform(m, u, s), -u / s, 1 / s)
        assert np.allclose(back, m, rtol=1e-12)

    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            hq.affine_transform([1, 0, 1], 0.0, 0.0)


class TestMomentsToRecurrence:
    def test_standard_normal(self):
        a, b = hq.moments_to_recurrence([1, 0, 1, 0, 3])
        assert np.allclose(a, [0, 0])
        assert np.allclose(b, [1, 1, 2])

    def test_three_moment_state(self):
        # oracle: Gram-Schmidt on {1, X}: Q_1 = X - U, <Q_1^2> = rho*theta
        rho, U, th = 2.5, -0.7, 1.9
        m = [rho, rho * U, rho * (U**2 + th)]
        a, b = hq.moments_to_recurrence(m)
        q1_sq = m[2] - 2 * U * m[1] + U**2 * m[0]
        assert np.allclose(a, [U])
        assert np.allclose(b, [rho, q1_sq / rho])
        assert q1_sq / rho == pytest.approx(th)

    def test_homogeneity(self):
        a1, b1 = hq.moments_to_recurrence([1, 0, 1, 0, 3])
        a2, b2 = hq.moments_to_recurrence([2, 0, 2, 0, 6])
        assert np.allclose(a2, a1)
        assert np.allclose(b2, [2, 1, 2])
        assert b2[0] == 2 * b1[0]

    def test_failure_carries_pivot_index(self):
        with pytest.raises(hq.NotRealizableError) as exc:
            hq.moments_to_recurrence([1, 0, 1, 0, 1])
        assert exc.value.pivot_index == 2

    def test_even_length(self):
        a, b = hq.moments_to_recurrence([1, 0, 1, 0])
        assert len(a) == 2 and len(b) == 2
        assert np.allclose(a, [0, 0]) and np.allclose(b, [1, 1])

    def test_maxwellian_coefficients(self, rng):
        # recurrence of rho * Delta_k(U, theta): a_k = U, b_0 = rho, b_k = k theta
        rho, U, th = 1.7, 0.8, 2.3
        m = hq.maxwellian_moments(rho, U, th, 8)
        a, b = hq.moments_to_recurrence(m)
        assert np.allclose(a, U, rtol=1e-10)
        assert np.allclose(b, [rho] + [k * th for k in range(1, 5)], rtol=1e-9)


class TestRecurrenceToMoments:
    def test_standard_normal_inverse(self):
        m = hq.recurrence_to_moments(([0, 0], [1, 1, 2]), 5)
        assert np.allclose(m, [1, 0, 1, 0, 3])

    def test_state_moments(self):
        rho, U, th = 2.0, 1.5, 0.7
        m = hq.recurrence_to_moments(([U], [rho, th]), 3)
        assert np.allclose(m, [rho, rho * U, rho * U**2 + rho * th])

    def test_round_trip_well_conditioned(self, rng):
        # 1000 random draws at modest order: identity to 1e-10 relative
        for n in (1, 2, 3):
            a, b = random_coefficients(rng, n, count=340)
            for i in range(a.shape[0]):
                m = hq.recurrence_to_moments((a[i], b[i]), 2 * n + 1)
                a2, b2 = hq.moments_to_recurrence(m)
                scale = max(np.max(np.abs(a[i])), np.sqrt(np.max(b[i])))
                assert np.max(np.abs(a2 - a[i])) < 1e-10 * scale
                assert np.max(np.abs(b2 - b[i]) / b[i]) < 1e-10

    def test_round_trip_condition_aware(self, rng):
        # At higher order the raw-moment bijection loses digits in proportion
        # to the reported cancellation estimate; the error stays within a
        # small multiple of eps * condition_estimate, and the well-conditioned
        # bulk still round-trips to 1e-10.
        eps = np.finfo(float).eps
        for n in (4, 5, 6):
            errs = []
            for _ in range(200):
                a, b = random_coefficients(rng, n)
                a, b = a[0], b[0]
                m = hq.recurrence_to_moments((a, b), 2 * n + 1)
                check = hq.is_strictly_realizable(m)
                a2, b2 = hq.moments_to_recurrence(m)
                scale = max(np.max(np.abs(a)), np.sqrt(np.max(b)))
                err = max(
                    np.max(np.abs(a2 - a)) / scale, np.max(np.abs(b2 - b) / b)
                )
                errs.append(err)
                assert err < 64 * eps * max(check.condition_estimate, 1.0)
            assert np.median(errs) < 1e-10

    def test_round_trip_moment_side(self, rng):
        for n in (1, 2, 3, 4):
            m = random_odd_moments(rng, n)[0]
            rc = hq.moments_to_recurrence(m)
            m2 = hq.recurrence_to_moments(rc, len(m))
            assert np.allclose(m2, m, rtol=1e-9)

    def test_insufficient_coefficients(self):
        with pytest.raises(ValueError, match="coefficients"):
            hq.recurrence_to_moments(([0.0], [1.0]), 5)

    def test_nonpositive_b_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            hq.recurrence_to_moments(([0.0, 0.0], [1.0, -1.0, 2.0]), 5)


class TestEquilibriumState:
    def test_bijection_with_low_moments(self):
        st = hq.EquilibriumState(rho=2.0, U=-1.0, theta=3.0)
        m = st.moments(2)
        back = hq.EquilibriumState.from_moments(m)
        assert back == st

    def test_validation(self):
        with pytest.raises(ValueError):
            hq.EquilibriumState(rho=0.0, U=0.0, theta=1.0)
        with pytest.raises(ValueError):
            hq.EquilibriumState(rho=1.0, U=0.0, theta=-1.0)

    def test_moment_vector(self):
        st = hq.EquilibriumState(rho=2.0, U=0.0, theta=1.0)
        assert np.allclose(st.moments(4), [2, 0, 2, 0, 6])


class TestSerialization:
    def test_json_round_trip(self, rng):
        m = random_odd_moments(rng, 3)[0]
        assert np.array_equal(hq.moments_from_json(hq.moments_to_json(m)), m)

    def test_csv_round_trip_exact(self, rng):
        m = random_odd_moments(rng, 4)[0]
        row = hq.moments_to_csv_row(m)
        assert np.array_equal(hq.moments_from_csv_row(row), m)
        assert "\n" not in row

    def test_csv_known_values(self):
        assert hq.moments_to_csv_row([1.0, 0.5]) == "1.0,0.5"

    def test_csv_extreme_magnitudes_round_trip(self):
        m = np.array([1e-200, 1.0 + 2**-52, -3.7e150, 0.1])
        assert np.array_equal(hq.moments_from_csv_row(hq.moments_to_csv_row(m)), m)
        assert np.array_equal(hq.moments_from_json(hq.moments_to_json(m)), m)
