import unittest
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from wh_indices.blaschke import BlaschkeProduct
from wh_indices.numerics import kernel_basis
from wh_indices.oracle import (
    FourierMismatchError,
    FourierTable,
    NoStabilizationError,
    analytic_toeplitz,
    controllability_section,
    fourier_R,
    fourier_coefficients,
    observability_section,
    oracle_cokernel_dims,
    oracle_kernel_dims,
    pair_tail,
    truncated_hankel,
    truncated_toeplitz,
    verify_realization_identities,
    verify_decomposition,
)
from wh_indices.realization import (
    Realization,
    blaschke_realization,
    diag_inner,
    monomial_realization,
    random_blaschke,
    random_inner_realization,
    taylor_coefficients,
)
from wh_indices.whindex import full_report


def worked_pair() -> tuple[Realization, Realization]:
    V = diag_inner([monomial_realization(n) for n in (0, 0, 0, 3, 5)])
    W = diag_inner([monomial_realization(n) for n in (4, 2, 0, 0, 0)])
    return V, W


def _unit(m: int, i: int) -> np.ndarray:
    E = np.zeros((m, m), dtype=np.complex128)
    E[i, i] = 1.0
    return E


class TestFourierCoefficients(unittest.TestCase):
    def test_diagonal_monomials(self) -> None:
        V, W = worked_pair()
        coeffs = fourier_coefficients(V, W, -6, 6)
        # R = diag(z^-4, z^-2, 1, z^3, z^5)
        expected = {-4: _unit(5, 0), -2: _unit(5, 1), 0: _unit(5, 2), 3: _unit(5, 3), 5: _unit(5, 4)}
        for n in range(-6, 7):
            with self.subTest(n=n):
                np.testing.assert_allclose(coeffs[n], expected.get(n, np.zeros((5, 5))), atol=1e-12)

    def test_random_pair_matches_convolution(self) -> None:
        rng = np.random.default_rng(51)
        V = random_inner_realization(3, 2, rng, max_radius=0.5)
        W = random_inner_realization(2, 2, rng, max_radius=0.5)
        table = FourierTable(V, W)
        table.ensure(-8, 8)
        for n in (-8, -3, 0, 2, 8):
            np.testing.assert_allclose(table[n], table.convolution(n), atol=1e-9)
        np.testing.assert_allclose(fourier_R(V, W, 2), table[2], atol=1e-12)

    def test_scalar_blaschke_quotient(self) -> None:
        # R = b / b = 1 for the same Blaschke product on both sides.
        r = blaschke_realization(random_blaschke(3, np.random.default_rng(52), max_radius=0.5))
        coeffs = fourier_coefficients(r, r, -4, 4)
        for n, R in coeffs.items():
            np.testing.assert_allclose(R, [[1.0 if n == 0 else 0.0]], atol=1e-10)

    def test_wrong_coupling_is_detected(self) -> None:
        rng = np.random.default_rng(53)
        V = random_inner_realization(2, 2, rng, max_radius=0.5)
        W = random_inner_realization(2, 2, rng, max_radius=0.5)
        with self.assertRaises(FourierMismatchError):
            FourierTable(V, W, omega=np.zeros((2, 2)))


class TestSections(unittest.TestCase):
    def test_toeplitz_layout(self) -> None:
        coeffs = {-1: np.array([[2.0]]), 0: np.array([[1.0]]), 1: np.array([[3.0]])}
        section = truncated_toeplitz(coeffs, 3, block_size=1)
        np.testing.assert_allclose(section.matrix, [[1, 2, 0], [3, 1, 2], [0, 3, 1]])
        shifted = truncated_toeplitz(coeffs, 2, block_size=1, row_levels=3, shift=1)
        np.testing.assert_allclose(shifted.matrix, [[2, 0], [1, 2], [3, 1]])
        with self.assertRaises(ValueError):
            truncated_toeplitz(coeffs, 0, block_size=1)

    def test_analytic_toeplitz_and_hankel(self) -> None:
        r = monomial_realization(2)
        T = analytic_toeplitz(r, 4).matrix
        np.testing.assert_allclose(T, np.eye(4, k=-2))
        H = truncated_hankel(r, 3).matrix
        # Θ_{i+j+1}: only Θ_2 = 1 is nonzero.
        np.testing.assert_allclose(H, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])

    def test_hankel_is_observability_times_controllability(self) -> None:
        rng = np.random.default_rng(54)
        r = random_inner_realization(3, 2, rng)
        coeffs = taylor_coefficients(r, 10)
        H = observability_section(r, 4) @ controllability_section(r, 4)
        for i in range(4):
            for j in range(4):
                np.testing.assert_allclose(H[2 * i : 2 * i + 2, 2 * j : 2 * j + 2], coeffs[i + j + 1], atol=1e-12)

    def test_pair_tail(self) -> None:
        V, W = worked_pair()
        self.assertEqual(pair_tail(V, W, 5), 0.0)
        r = blaschke_realization(random_blaschke(2, np.random.default_rng(55), max_radius=0.5))
        self.assertGreater(pair_tail(r, r, 2), pair_tail(r, r, 20))


class TestOracle(unittest.TestCase):
    def test_worked_example(self) -> None:
        V, W = worked_pair()
        self.assertEqual(oracle_kernel_dims(V, W, 5), (6, 4, 2, 1, 0, 0))
        self.assertEqual(oracle_cokernel_dims(V, W, 5), (8, 6, 4, 2, 1, 0))

    def test_parallel_oracle_matches(self) -> None:
        V, W = worked_pair()
        with ThreadPoolExecutor(max_workers=3) as pool:
            self.assertEqual(oracle_kernel_dims(V, W, 5, executor=pool), (6, 4, 2, 1, 0, 0))

    def test_scalar_monomials_at_eight_levels(self) -> None:
        V, W = monomial_realization(2), monomial_realization(3)
        table = FourierTable(V, W)
        table.ensure(-8, 16)
        section = truncated_toeplitz(table.__getitem__, 8, block_size=1, row_levels=16)
        self.assertEqual(kernel_basis(section.matrix, scale=1.0).shape[1], 1)
        self.assertEqual(oracle_kernel_dims(V, W, 1), (1, 0))
        self.assertEqual(oracle_cokernel_dims(V, W, 1), (0, 0))

    def test_generated_pairs_agree_with_pipeline(self) -> None:
        rng = np.random.default_rng(56)
        pairs: list[tuple[Realization, Realization]] = []
        for _ in range(9):
            m = int(rng.integers(1, 4))
            degrees = rng.integers(0, 4, size=(2, m))
            while degrees.sum() > 12:
                degrees = rng.integers(0, 4, size=(2, m))
            V = diag_inner([monomial_realization(int(d)) for d in degrees[0]])
            W = diag_inner([monomial_realization(int(d)) for d in degrees[1]])
            pairs.append((V, W))
        for _ in range(8):
            m = int(rng.integers(1, 4))
            degrees = rng.integers(0, 3, size=(2, m))
            V = diag_inner([blaschke_realization(random_blaschke(int(d), rng, max_radius=0.6)) for d in degrees[0]])
            W = diag_inner([blaschke_realization(random_blaschke(int(d), rng, max_radius=0.6)) for d in degrees[1]])
            pairs.append((V, W))
        for _ in range(8):
            m = int(rng.integers(1, 3))
            n_v, n_w = (int(d) for d in rng.integers(0, 4, size=2))
            pairs.append(
                (
                    random_inner_realization(n_v, m, rng, max_radius=0.3),
                    random_inner_realization(n_w, m, rng, max_radius=0.3),
                )
            )
        for i, (V, W) in enumerate(pairs):
            with self.subTest(pair=i, n_v=V.state_dim, n_w=W.state_dim, m=V.io_dim):
                r = full_report(V, W)
                ker = oracle_kernel_dims(V, W, len(r.kernel_dims), n_max=64)
                coker = oracle_cokernel_dims(V, W, len(r.cokernel_dims), n_max=64)
                self.assertEqual(ker, r.kernel_dims + (0,))
                self.assertEqual(coker, r.cokernel_dims + (0,))
                self.assertEqual(ker[0] - coker[0], r.fredholm_index)
                self.assertEqual(sum(r.indices), V.state_dim - W.state_dim)

    def test_diagonal_blaschke_pairs_stabilize_below_64(self) -> None:
        # Zeros close to radius 0.6 on both sides make the coefficient tails decay slowest.
        V = diag_inner(
            [
                blaschke_realization(BlaschkeProduct(zeros=(0.6, -0.59j))),
                blaschke_realization(BlaschkeProduct(zeros=(0.58 + 0.1j,))),
                monomial_realization(0),
            ]
        )
        W = diag_inner(
            [
                blaschke_realization(BlaschkeProduct(zeros=(-0.6,))),
                blaschke_realization(BlaschkeProduct(zeros=(0.59j, -0.4 + 0.4j))),
                blaschke_realization(BlaschkeProduct(zeros=(0.55, 0.1))),
            ]
        )
        r = full_report(V, W)
        self.assertEqual(r.indices, (-2, -1, 1))
        self.assertEqual(oracle_kernel_dims(V, W, len(r.kernel_dims), n_max=64), r.kernel_dims + (0,))
        self.assertEqual(oracle_cokernel_dims(V, W, len(r.cokernel_dims), n_max=64), r.cokernel_dims + (0,))

    def test_no_stabilization(self) -> None:
        V, W = worked_pair()
        with self.assertRaises(NoStabilizationError):
            oracle_kernel_dims(V, W, 1, n_max=4)


class TestResidualIdentities(unittest.TestCase):
    def test_finitely_supported_symbols_are_exact(self) -> None:
        V, W = worked_pair()
        report = verify_decomposition(V, W, 12)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.max_residual, 1e-10)
        for r in (V, W):
            identities = verify_realization_identities(r, 12)
            self.assertTrue(identities.passed)
            self.assertLessEqual(identities.max_residual, 1e-10)
            self.assertEqual(len(identities.checks), 4)

    def test_random_blaschke_realizations(self) -> None:
        rng = np.random.default_rng(57)
        for i in range(20):
            r = blaschke_realization(random_blaschke(int(rng.integers(1, 5)), rng, max_radius=0.6))
            with self.subTest(i=i, degree=r.state_dim):
                report = verify_realization_identities(r, 32)
                self.assertTrue(report.passed, [(c.name, c.residual, c.threshold) for c in report.checks])

    def test_decomposition_for_random_pair(self) -> None:
        rng = np.random.default_rng(58)
        V = random_inner_realization(3, 2, rng, max_radius=0.5)
        W = random_inner_realization(4, 2, rng, max_radius=0.5)
        self.assertTrue(verify_decomposition(V, W, 32).passed)


if __name__ == "__main__":
    unittest.main()
