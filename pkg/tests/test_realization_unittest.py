import unittest

import numpy as np

from wh_indices.blaschke import BlaschkeProduct, evaluate_b, power_series_coefficients
from wh_indices.numerics import DimensionMismatchError, random_unitary, spectral_radius
from wh_indices.realization import (
    Realization,
    SingularResolventError,
    blaschke_realization,
    cascade,
    constant_realization,
    diag_inner,
    evaluate,
    monomial_realization,
    random_inner_realization,
    random_unitary_realization,
    state_transform,
    taylor_coefficient,
    taylor_coefficients,
    tilde,
    validate,
)


class TestRealizationShapes(unittest.TestCase):
    def test_constant_realization_has_empty_state(self) -> None:
        r = constant_realization(np.eye(2))
        self.assertEqual(r.state_dim, 0)
        self.assertEqual(r.io_dim, 2)
        self.assertEqual(r.B.shape, (0, 2))
        self.assertEqual(r.C.shape, (2, 0))

    def test_empty_b_and_c_are_inferred(self) -> None:
        r = Realization(A=[], B=[], C=[], D=[[1.0]])
        self.assertEqual(r.B.shape, (0, 1))
        self.assertEqual(r.C.shape, (1, 0))

    def test_dimension_mismatch(self) -> None:
        with self.assertRaises(DimensionMismatchError):
            Realization(A=np.zeros((2, 2)), B=np.zeros((3, 1)), C=np.zeros((1, 2)), D=np.zeros((1, 1)))
        with self.assertRaises(DimensionMismatchError):
            Realization(A=np.zeros((2, 2)), B=np.zeros((2, 1)), C=np.zeros((1, 2)), D=np.zeros((1, 2)))

    def test_arrays_are_read_only(self) -> None:
        r = monomial_realization(2)
        with self.assertRaises(ValueError):
            r.A[0, 0] = 1.0


class TestValidate(unittest.TestCase):
    def test_monomial_is_stable_and_unitary(self) -> None:
        report = validate(monomial_realization(3))
        self.assertTrue(report.passed)
        self.assertLess(report.unitarity_residual, 1e-14)
        self.assertEqual(report.spectral_radius, 0.0)

    def test_scaled_d_fails(self) -> None:
        r = monomial_realization(0)
        bad = Realization(A=r.A, B=r.B, C=r.C, D=2 * r.D)
        report = validate(bad)
        self.assertFalse(report.passed)
        self.assertAlmostEqual(report.isometry_residual, 3.0)
        self.assertIn("FAIL", report.describe())

    def test_unitary_but_unstable_fails(self) -> None:
        r = Realization(A=[[1.0]], B=[[0.0]], C=[[0.0]], D=[[1.0]])
        report = validate(r)
        self.assertFalse(report.passed)
        self.assertTrue(report.margin_warning)

    def test_random_generators_validate(self) -> None:
        rng = np.random.default_rng(5)
        for n, m in ((0, 1), (1, 1), (3, 2), (6, 3)):
            with self.subTest(n=n, m=m):
                u = random_unitary_realization(n, m, rng)
                i = random_inner_realization(n, m, rng, max_radius=0.5)
                self.assertTrue(validate(u).passed)
                self.assertTrue(validate(i).passed)
                self.assertEqual(i.state_dim, n)
                self.assertLessEqual(spectral_radius(i.A), 0.5 + 1e-12)


class TestTransferFunction(unittest.TestCase):
    def test_monomial_evaluates_to_power(self) -> None:
        r = monomial_realization(3)
        for z in (0.3, -0.5j, 0.2 + 0.4j):
            np.testing.assert_allclose(evaluate(r, z), [[z**3]], atol=1e-14)

    def test_taylor_coefficients_of_monomial(self) -> None:
        coeffs = taylor_coefficients(monomial_realization(2), 5)
        values = [complex(c[0, 0]) for c in coeffs]
        self.assertEqual(values, [0, 0, 1, 0, 0])
        np.testing.assert_allclose(taylor_coefficient(monomial_realization(2), 2), [[1.0]])

    def test_taylor_coefficients_of_constant(self) -> None:
        coeffs = taylor_coefficients(constant_realization(np.eye(2)), 3)
        np.testing.assert_allclose(coeffs[0], np.eye(2))
        np.testing.assert_allclose(coeffs[2], 0.0)
        with self.assertRaises(ValueError):
            taylor_coefficient(constant_realization(np.eye(2)), -1)

    def test_singular_resolvent(self) -> None:
        r = Realization(A=[[0.5]], B=[[np.sqrt(0.75)]], C=[[np.sqrt(0.75)]], D=[[-0.5]])
        with self.assertRaises(SingularResolventError):
            evaluate(r, 2.0)

    def test_tilde_conjugates_coefficients(self) -> None:
        rng = np.random.default_rng(6)
        r = random_unitary_realization(3, 2, rng)
        for a, b in zip(taylor_coefficients(r, 4), taylor_coefficients(tilde(r), 4)):
            np.testing.assert_allclose(b, a.conj().T, atol=1e-14)

    def test_values_on_the_circle_are_unitary(self) -> None:
        rng = np.random.default_rng(15)
        for r in (random_unitary_realization(4, 3, rng), random_inner_realization(5, 2, rng)):
            self.assertTrue(validate(r).passed)
            for theta in rng.uniform(0.0, 2.0 * np.pi, size=100):
                T = evaluate(r, np.exp(1j * theta))
                np.testing.assert_allclose(T.conj().T @ T, np.eye(r.io_dim), atol=1e-8)


class TestBlaschkeRealization(unittest.TestCase):
    def test_values_match_the_product(self) -> None:
        b = BlaschkeProduct(zeta=1j, zeros=(0.3, -0.2 + 0.1j, 0.5j))
        r = blaschke_realization(b)
        self.assertTrue(validate(r).passed)
        self.assertEqual(r.state_dim, 3)
        for z in (0.1, 0.4 - 0.3j, -0.6j):
            self.assertAlmostEqual(complex(evaluate(r, z)[0, 0]), evaluate_b(b, z), places=12)

    def test_coefficients_match_power_series(self) -> None:
        b = BlaschkeProduct(zeros=(0.4, -0.3j))
        expected = power_series_coefficients(b, 6)
        got = np.array([c[0, 0] for c in taylor_coefficients(blaschke_realization(b), 6)])
        np.testing.assert_allclose(got, expected, atol=1e-14)

    def test_degree_zero_is_constant(self) -> None:
        r = blaschke_realization(BlaschkeProduct(zeta=-1.0))
        self.assertEqual(r.state_dim, 0)
        np.testing.assert_allclose(r.D, [[-1.0]])


class TestComposition(unittest.TestCase):
    def test_cascade_multiplies_transfer_functions(self) -> None:
        rng = np.random.default_rng(7)
        outer = random_unitary_realization(2, 2, rng)
        inner = random_unitary_realization(3, 2, rng)
        r = cascade(outer, inner)
        self.assertTrue(validate(r).passed)
        z = 0.3 - 0.2j
        np.testing.assert_allclose(evaluate(r, z), evaluate(outer, z) @ evaluate(inner, z), atol=1e-12)

    def test_cascade_rejects_io_mismatch(self) -> None:
        with self.assertRaises(DimensionMismatchError):
            cascade(constant_realization(np.eye(1)), constant_realization(np.eye(2)))

    def test_diag_inner(self) -> None:
        r = diag_inner([monomial_realization(0), monomial_realization(2), monomial_realization(1)])
        self.assertEqual((r.state_dim, r.io_dim), (3, 3))
        self.assertTrue(validate(r).passed)
        z = 0.5
        np.testing.assert_allclose(evaluate(r, z), np.diag([1.0, z**2, z]), atol=1e-14)

    def test_diag_inner_rejects_matrix_entries(self) -> None:
        with self.assertRaises(DimensionMismatchError):
            diag_inner([constant_realization(np.eye(2))])

    def test_state_transform_preserves_transfer_function(self) -> None:
        rng = np.random.default_rng(8)
        r = random_unitary_realization(3, 2, rng)
        s = state_transform(r, random_unitary(3, rng))
        self.assertTrue(validate(s).passed)
        np.testing.assert_allclose(evaluate(s, 0.4j), evaluate(r, 0.4j), atol=1e-12)
        self.assertTrue(r.allclose(state_transform(r, np.eye(3))))

    def test_cascade_of_constants(self) -> None:
        U = random_unitary(2, np.random.default_rng(13))
        r = cascade(constant_realization(np.eye(2)), constant_realization(U))
        self.assertEqual(r.state_dim, 0)
        self.assertEqual((r.A.shape, r.B.shape, r.C.shape), ((0, 0), (0, 2), (2, 0)))
        np.testing.assert_allclose(r.D, U)
        self.assertTrue(validate(r).passed)
        lifted = cascade(constant_realization(np.eye(1)), monomial_realization(2))
        self.assertEqual((lifted.state_dim, lifted.B.shape), (2, (2, 1)))

    def test_random_inner_with_empty_state(self) -> None:
        rng = np.random.default_rng(14)
        for m in (1, 2, 3):
            with self.subTest(m=m):
                r = random_inner_realization(0, m, rng)
                self.assertEqual((r.state_dim, r.io_dim), (0, m))
                self.assertTrue(validate(r).passed)

    def test_random_inner_survives_layers_without_zeros(self) -> None:
        # With n = 2 spread over two layers, whole layers often get no zeros at all.
        for seed in range(200):
            r = random_inner_realization(2, 2, np.random.default_rng(seed))
            with self.subTest(seed=seed):
                self.assertEqual(r.state_dim, 2)
                self.assertTrue(validate(r).passed)


if __name__ == "__main__":
    unittest.main()
