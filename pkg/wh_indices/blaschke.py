from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from wh_indices.numerics import (
    DEFAULT_TOLERANCES,
    DimensionMismatchError,
    SingularSystemError,
    Tolerances,
    adjoint,
    as_matrix,
    eig_one_multiplicity,
    hermitian_part,
    identity,
    norm2,
    solve_dense,
    spectral_radius,
)
from wh_indices.reports import IndexDiagnostics, IndexReport


log = logging.getLogger(__name__)

UNIMODULAR_TOLERANCE = 1e-8
DEFAULT_SAMPLE_RADIUS = 0.7
DEFAULT_SAMPLE_COUNT = 16


class NonUnimodularError(ValueError):
    pass


class ZeroOnOrOutsideDiscError(ValueError):
    pass


class PoleHitError(ValueError):
    pass


class UnstableArgumentError(ValueError):
    pass


class NotAContractionError(ValueError):
    pass


class NoUnitEigenvectorError(RuntimeError):
    pass


class ZeroDenominatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class BlaschkeProduct:
    """b(z) = ζ Π_k (z − α_k) / (1 − ᾱ_k z) with |ζ| = 1 and |α_k| < 1."""

    zeta: complex = 1.0
    zeros: tuple[complex, ...] = ()

    def __post_init__(self) -> None:
        zeta = complex(self.zeta)
        zeros = tuple(complex(a) for a in self.zeros)
        if abs(abs(zeta) - 1.0) > UNIMODULAR_TOLERANCE:
            raise NonUnimodularError(f"zeta must be unimodular, got |zeta| = {abs(zeta):.12f}")
        for alpha in zeros:
            if not abs(alpha) < 1.0:
                raise ZeroOnOrOutsideDiscError(f"zero {alpha} is not inside the open unit disc")
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "zeros", zeros)

    @classmethod
    def monomial(cls, n: int) -> "BlaschkeProduct":
        if n < 0:
            raise ValueError("n must be >= 0")
        return cls(zeta=1.0, zeros=(0j,) * n)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def tilde(self) -> "BlaschkeProduct":
        """b̃(z) = conj(b(z̄)): conjugate constant and zeros."""
        return BlaschkeProduct(zeta=np.conj(self.zeta), zeros=tuple(np.conj(a) for a in self.zeros))

    def __mul__(self, other: "BlaschkeProduct") -> "BlaschkeProduct":
        if not isinstance(other, BlaschkeProduct):
            return NotImplemented
        return BlaschkeProduct(zeta=self.zeta * other.zeta, zeros=self.zeros + other.zeros)


def product(factors: Iterable[BlaschkeProduct]) -> BlaschkeProduct:
    out = BlaschkeProduct()
    for b in factors:
        out = out * b
    return out


def evaluate_b(b: BlaschkeProduct, z: complex) -> complex:
    z = complex(z)
    value = b.zeta
    for alpha in b.zeros:
        denominator = 1.0 - np.conj(alpha) * z
        if abs(denominator) <= 1e-14:
            raise PoleHitError(f"z = {z} is a pole of the Blaschke factor with zero {alpha}")
        value *= (z - alpha) / denominator
    return complex(value)


def power_series_coefficients(b: BlaschkeProduct, count: int) -> np.ndarray:
    """First `count` Taylor coefficients of b at 0, expanded factor by factor."""
    if count <= 0:
        return np.zeros(0, dtype=np.complex128)
    out = np.zeros(count, dtype=np.complex128)
    out[0] = b.zeta
    for alpha in b.zeros:
        # (z − α)/(1 − ᾱz) = −α + Σ_{k≥1} (1 − |α|²) ᾱ^{k−1} zᵏ
        factor = np.zeros(count, dtype=np.complex128)
        factor[0] = -alpha
        if count > 1:
            factor[1:] = (1.0 - abs(alpha) ** 2) * np.conj(alpha) ** np.arange(count - 1)
        out = np.convolve(out, factor)[:count]
    return out


def phi_of_matrix(b: BlaschkeProduct, A: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """ζ Π_k (A − α_k I)(I − ᾱ_k A)⁻¹ for a stable square A."""
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError(f"expected a square matrix, got {A.shape}")
    radius = spectral_radius(A)
    if radius >= 1.0:
        raise UnstableArgumentError(f"spectral radius {radius:.12f} is not below 1")
    eye = identity(n)
    out = b.zeta * eye
    for alpha in b.zeros:
        try:
            factor = solve_dense(eye - np.conj(alpha) * A, A - alpha * eye, t)
        except SingularSystemError as exc:
            raise UnstableArgumentError(f"I - conj({alpha}) A is singular") from exc
        out = out @ factor
    return out


def defect_index(M: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES) -> int:
    """Rank of I − M*M, counted as dim X minus the unit-eigenvalue multiplicity of M*M."""
    M = as_matrix(M)
    size = norm2(M)
    if size > 1.0 + t.residual:
        raise NotAContractionError(f"||M|| = {size:.12f} exceeds 1")
    return M.shape[1] - eig_one_multiplicity(adjoint(M) @ M, t)


def default_sample_points(count: int = DEFAULT_SAMPLE_COUNT, radius: float = DEFAULT_SAMPLE_RADIUS) -> list[complex]:
    return [complex(radius * np.exp(2j * np.pi * k / count)) for k in range(count)]


def _unit_eigenvector(M: np.ndarray, t: Tolerances) -> np.ndarray:
    """Eigenvector of the largest eigenvalue of M*M, which must sit at 1."""
    G = hermitian_part(adjoint(M) @ M, t)
    if G.size == 0:
        raise NoUnitEigenvectorError("empty state space")
    eigs, vecs = sla.eigh(G, check_finite=False)
    if eigs[-1] < 1.0 - t.eig_one:
        raise NoUnitEigenvectorError(f"largest eigenvalue {eigs[-1]:.12f} is below the unit cutoff")
    return vecs[:, -1]


def _check_defect_pair(A: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError(f"expected a square state matrix, got {A.shape}")
    C = as_matrix(C, cols=n)
    if C.shape[0] != 1:
        raise DimensionMismatchError(f"C must be a single row, got {C.shape}")
    return A, C


def _resolvent_row(A: np.ndarray, C: np.ndarray, z: complex, t: Tolerances) -> np.ndarray:
    """Row vector C (I − zA)⁻¹."""
    n = A.shape[0]
    try:
        return adjoint(solve_dense(adjoint(identity(n) - z * A), adjoint(C), t))
    except SingularSystemError as exc:
        raise ZeroDenominatorError(f"I - zA is singular at z = {z}") from exc


def _quotients(
    A: np.ndarray,
    C: np.ndarray,
    numerator: np.ndarray,
    denominator: np.ndarray,
    points: Sequence[complex],
    t: Tolerances,
) -> list[complex]:
    values: list[complex] = []
    scale = max(norm2(C) * np.linalg.norm(denominator), 1.0)
    for z in points:
        row = _resolvent_row(A, C, complex(z), t)
        den = complex((row @ denominator)[0])
        if abs(den) <= t.residual * scale:
            raise ZeroDenominatorError(f"denominator vanishes at z = {z}; choose a nearby point")
        values.append(complex((row @ numerator)[0]) / den)
    return values


def reconstruct_phi(
    A: np.ndarray,
    C: np.ndarray,
    phi: BlaschkeProduct,
    sample_points: Sequence[complex] | None = None,
    t: Tolerances = DEFAULT_TOLERANCES,
) -> list[complex]:
    """
    Recover φ from φ(A*) alone.

    With I − A*A = C*C and x a unit eigenvector of φ(A*)*φ(A*) at eigenvalue 1,
    φ(z) = C(I − zA)⁻¹φ(A*)x / C(I − zA)⁻¹x.
    """
    A, C = _check_defect_pair(A, C)
    points = default_sample_points() if sample_points is None else list(sample_points)
    F = phi_of_matrix(phi, adjoint(A), t)
    x = _unit_eigenvector(F, t)
    return _quotients(A, C, F @ x, x, points, t)


def reconstruct_phi_dual(
    A: np.ndarray,
    C: np.ndarray,
    phi: BlaschkeProduct,
    sample_points: Sequence[complex] | None = None,
    t: Tolerances = DEFAULT_TOLERANCES,
) -> list[complex]:
    """φ(z) = C(I − zA)⁻¹x / C(I − zA)⁻¹φ̃(A)x with x at eigenvalue 1 of φ̃(A)*φ̃(A)."""
    A, C = _check_defect_pair(A, C)
    points = default_sample_points() if sample_points is None else list(sample_points)
    F = phi_of_matrix(phi.tilde(), A, t)
    x = _unit_eigenvector(F, t)
    return _quotients(A, C, x, F @ x, points, t)


def _staircase(total: int) -> tuple[int, ...]:
    return tuple(range(total, -1, -1))


def scalar_index_report(phi: BlaschkeProduct, m: BlaschkeProduct) -> IndexReport:
    """
    Index data of R = φ·conj(m) on the circle.

    The single partial index is deg φ − deg m; T_R is onto when deg φ < deg m, one to one
    when deg φ > deg m and invertible when the degrees agree.
    """
    index = phi.degree - m.degree
    n_tr = max(-index, 0)
    d_tr = max(index, 0)
    diagnostics = IndexDiagnostics(
        kernel_omega=n_tr,
        kernel_omega_adjoint=d_tr,
        state_dim_difference=index,
        rank_y=min(phi.degree, m.degree),
    )
    return IndexReport(
        negative_indices=(index,) if index < 0 else (),
        positive_indices=(index,) if index > 0 else (),
        zero_count=1 if index == 0 else 0,
        kernel_dims=_staircase(n_tr),
        cokernel_dims=_staircase(d_tr),
        mu=(1,) * n_tr,
        nu=(1,) * d_tr,
        n_tr=n_tr,
        d_tr=d_tr,
        fredholm_index=n_tr - d_tr,
        diagnostics=diagnostics,
    )
