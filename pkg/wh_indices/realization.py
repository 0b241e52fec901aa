from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from wh_indices.blaschke import BlaschkeProduct
from wh_indices.numerics import (
    DEFAULT_TOLERANCES,
    DimensionMismatchError,
    SingularSystemError,
    Tolerances,
    adjoint,
    as_matrix,
    identity,
    norm2,
    random_unitary,
    solve_dense,
    spectral_radius,
)


log = logging.getLogger(__name__)

STABILITY_MARGIN = 1e-6


class SingularResolventError(RuntimeError):
    pass


def _frozen(M: np.ndarray) -> np.ndarray:
    M = np.array(M, dtype=np.complex128, copy=True)
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class Realization:
    """
    State-space data {A, B, C, D} of Θ(z) = D + z C (I − zA)⁻¹ B.

    A is n×n, B is n×m, C is m×n and D is m×m; n may be 0 (constant Θ = D).
    Unitarity and stability are not enforced here; see `validate`.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self) -> None:
        D = as_matrix(self.D)
        m = D.shape[0]
        if m < 1 or D.shape != (m, m):
            raise DimensionMismatchError(f"D must be a nonempty square matrix, got {D.shape}")
        A = as_matrix(self.A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatchError(f"A must be square, got {A.shape}")
        B = as_matrix(self.B, rows=n, cols=m) if np.size(self.B) == 0 else as_matrix(self.B)
        C = as_matrix(self.C, rows=m, cols=n) if np.size(self.C) == 0 else as_matrix(self.C)
        if B.shape != (n, m):
            raise DimensionMismatchError(f"B must be {n}x{m}, got {B.shape}")
        if C.shape != (m, n):
            raise DimensionMismatchError(f"C must be {m}x{n}, got {C.shape}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "D", _frozen(D))

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def io_dim(self) -> int:
        return self.D.shape[0]

    def systems_operator(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def allclose(self, other: "Realization", *, atol: float = 1e-12) -> bool:
        return (
            self.A.shape == other.A.shape
            and self.D.shape == other.D.shape
            and all(
                np.allclose(x, y, atol=atol, rtol=0.0)
                for x, y in ((self.A, other.A), (self.B, other.B), (self.C, other.C), (self.D, other.D))
            )
        )


@dataclass(frozen=True)
class ValidationReport:
    isometry_residual: float
    coisometry_residual: float
    spectral_radius: float
    passed: bool
    margin_warning: bool

    @property
    def unitarity_residual(self) -> float:
        return max(self.isometry_residual, self.coisometry_residual)

    def describe(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"{status}: ||T*T - I|| = {self.isometry_residual:.3e}, ||TT* - I|| = {self.coisometry_residual:.3e}, "
            f"spectral radius = {self.spectral_radius:.6f}"
        )


def validate(r: Realization, t: Tolerances = DEFAULT_TOLERANCES) -> ValidationReport:
    T = r.systems_operator()
    eye = identity(T.shape[0])
    iso = norm2(adjoint(T) @ T - eye)
    coiso = norm2(T @ adjoint(T) - eye)
    radius = spectral_radius(r.A)
    passed = iso <= t.residual and coiso <= t.residual and radius < 1.0
    margin_warning = radius > 1.0 - STABILITY_MARGIN
    if margin_warning:
        log.warning("Realization is close to the stability boundary (spectral radius %.9f)", radius)
    return ValidationReport(
        isometry_residual=iso,
        coisometry_residual=coiso,
        spectral_radius=radius,
        passed=passed,
        margin_warning=margin_warning,
    )


def evaluate(r: Realization, z: complex, t: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Θ(z) = D + z C (I − zA)⁻¹ B."""
    z = complex(z)
    if r.state_dim == 0:
        return np.array(r.D, dtype=np.complex128)
    try:
        x = solve_dense(identity(r.state_dim) - z * r.A, r.B, t)
    except SingularSystemError as exc:
        raise SingularResolventError(f"I - zA is singular at z = {z}") from exc
    return r.D + z * (r.C @ x)


def taylor_coefficient(r: Realization, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return np.array(r.D, dtype=np.complex128)
    return r.C @ np.linalg.matrix_power(r.A, k - 1) @ r.B if r.state_dim else np.zeros_like(r.D)


def taylor_coefficients(r: Realization, count: int) -> list[np.ndarray]:
    """[Θ_0, ..., Θ_{count-1}] computed with one running power of A."""
    out: list[np.ndarray] = []
    if count <= 0:
        return out
    out.append(np.array(r.D, dtype=np.complex128))
    if r.state_dim == 0:
        out.extend(np.zeros_like(r.D) for _ in range(count - 1))
        return out
    AkB = np.array(r.B, dtype=np.complex128)
    for _ in range(1, count):
        out.append(r.C @ AkB)
        AkB = r.A @ AkB
    return out


def tilde(r: Realization) -> Realization:
    """Realization of Θ̃(z) = Θ(z̄)*, whose Taylor coefficients are Θ_k*."""
    return Realization(A=adjoint(r.A), B=adjoint(r.C), C=adjoint(r.B), D=adjoint(r.D))


def constant_realization(D: np.ndarray) -> Realization:
    D = as_matrix(D)
    m = D.shape[0]
    return Realization(
        A=np.zeros((0, 0), dtype=np.complex128),
        B=np.zeros((0, m), dtype=np.complex128),
        C=np.zeros((m, 0), dtype=np.complex128),
        D=D,
    )


def jordan_block(n: int) -> np.ndarray:
    """Upper triangular n×n Jordan block with eigenvalue zero."""
    return np.eye(n, k=1, dtype=np.complex128)


def monomial_realization(n: int) -> Realization:
    """Stable unitary realization {J_n(0), e_n, e_1ᵀ, 0} of zⁿ."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return constant_realization(np.ones((1, 1)))
    B = np.zeros((n, 1), dtype=np.complex128)
    B[n - 1, 0] = 1.0
    C = np.zeros((1, n), dtype=np.complex128)
    C[0, 0] = 1.0
    return Realization(A=jordan_block(n), B=B, C=C, D=np.zeros((1, 1)))


def _blaschke_section(alpha: complex, zeta: complex) -> Realization:
    s = np.sqrt(1.0 - abs(alpha) ** 2)
    return Realization(
        A=[[np.conj(alpha)]],
        B=[[s]],
        C=[[zeta * s]],
        D=[[-zeta * alpha]],
    )


def blaschke_realization(b: BlaschkeProduct) -> Realization:
    """Cascade of degree-one sections; the unimodular constant rides on the first one."""
    if b.degree == 0:
        return constant_realization([[b.zeta]])
    out = _blaschke_section(b.zeros[0], b.zeta)
    for alpha in b.zeros[1:]:
        out = cascade(out, _blaschke_section(alpha, 1.0))
    return out


def cascade(outer: Realization, inner: Realization) -> Realization:
    """Series connection realizing Θ_outer(z)·Θ_inner(z); the state is (x_outer, x_inner)."""
    if outer.io_dim != inner.io_dim:
        raise DimensionMismatchError(
            f"cannot cascade realizations with I/O dimensions {outer.io_dim} and {inner.io_dim}"
        )
    no, ni = outer.state_dim, inner.state_dim
    A = np.block(
        [
            [outer.A, outer.B @ inner.C],
            [np.zeros((ni, no), dtype=np.complex128), inner.A],
        ]
    )
    B = np.vstack([outer.B @ inner.D, inner.B])
    C = np.hstack([outer.C, outer.D @ inner.C])
    D = outer.D @ inner.D
    return Realization(A=A.reshape(no + ni, no + ni), B=B.reshape(no + ni, outer.io_dim), C=C, D=D)


def diag_inner(entries: Sequence[Realization]) -> Realization:
    """Realization of diag(θ_1, ..., θ_m) from scalar realizations; states are stacked entry by entry."""
    if not entries:
        raise ValueError("diag_inner needs at least one entry")
    for i, e in enumerate(entries):
        if e.io_dim != 1:
            raise DimensionMismatchError(f"entry {i} is not scalar (I/O dimension {e.io_dim})")
    m = len(entries)
    dims = [e.state_dim for e in entries]
    n = sum(dims)
    A = sla.block_diag(*[e.A for e in entries]) if n else np.zeros((0, 0))
    B = np.zeros((n, m), dtype=np.complex128)
    C = np.zeros((m, n), dtype=np.complex128)
    D = np.zeros((m, m), dtype=np.complex128)
    offset = 0
    for i, e in enumerate(entries):
        block = slice(offset, offset + e.state_dim)
        B[block, i] = e.B[:, 0]
        C[i, block] = e.C[0, :]
        D[i, i] = e.D[0, 0]
        offset += e.state_dim
    return Realization(A=np.asarray(A).reshape(n, n), B=B, C=C, D=D)


def state_transform(r: Realization, U: np.ndarray) -> Realization:
    """Unitarily equivalent realization {U A U*, U B, C U*, D}."""
    U = as_matrix(U, rows=r.state_dim, cols=r.state_dim)
    return Realization(A=U @ r.A @ adjoint(U), B=U @ r.B, C=r.C @ adjoint(U), D=r.D)


def random_unitary_realization(n: int, m: int, rng: np.random.Generator) -> Realization:
    """
    Compression of a Haar-random unitary systems operator.

    The upper-left n×n corner of a Haar unitary is a strict contraction almost surely,
    so the result is a stable unitary realization of a generic bi-inner function.
    """
    T = random_unitary(n + m, rng)
    return Realization(A=T[:n, :n], B=T[:n, n:], C=T[n:, :n], D=T[n:, n:])


def random_blaschke(degree: int, rng: np.random.Generator, *, max_radius: float = 0.6) -> BlaschkeProduct:
    radii = max_radius * np.sqrt(rng.uniform(0.0, 1.0, size=degree))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=degree)
    zeros = tuple(complex(z) for z in radii * np.exp(1j * angles))
    zeta = complex(np.exp(1j * rng.uniform(0.0, 2.0 * np.pi)))
    return BlaschkeProduct(zeta=zeta, zeros=zeros)


def random_inner_realization(
    n: int,
    m: int,
    rng: np.random.Generator,
    *,
    max_radius: float = 0.6,
    layers: int = 2,
) -> Realization:
    """
    U_0 · diag(b_11, ..., b_1m) · U_1 · diag(b_21, ...) · U_2 ... with Haar unitaries U_i.

    The n zeros are spread at random over the layers and channels; every eigenvalue of
    the resulting state matrix has modulus at most `max_radius`.
    """
    layers = max(int(layers), 1)
    slots = rng.integers(0, layers * m, size=n)
    out = constant_realization(random_unitary(m, rng))
    for layer in range(layers):
        entries = []
        for channel in range(m):
            degree = int(np.count_nonzero(slots == layer * m + channel))
            entries.append(blaschke_realization(random_blaschke(degree, rng, max_radius=max_radius)))
        out = cascade(out, diag_inner(entries))
        out = cascade(out, constant_realization(random_unitary(m, rng)))
    return out
