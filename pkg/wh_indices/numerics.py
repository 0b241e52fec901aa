from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg as sla


log = logging.getLogger(__name__)


class ToleranceError(ValueError):
    pass


class NonHermitianError(RuntimeError):
    pass


class SingularSystemError(RuntimeError):
    pass


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """
    Cutoffs for every numerical decision in the package.

    - rank_rel: relative singular-value cutoff used for ranks and kernels.
    - eig_one: distance-to-1 cutoff used when counting unit eigenvalues.
    - residual: cutoff used when checking contracts (unitarity, Stein residuals, ...).
    """

    rank_rel: float = 1e-9
    eig_one: float = 1e-8
    residual: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("rank_rel", "eig_one", "residual"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not np.isfinite(value) or value <= 0:
                raise ToleranceError(f"{name} must be a finite positive number")


DEFAULT_TOLERANCES = Tolerances()


def as_matrix(value: Any, *, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """
    Coerce `value` to a 2-D complex128 array.

    Empty inputs become 0×cols (or rows×0) matrices when the missing dimension is supplied.
    """
    arr = np.asarray(value, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.size == 0:
        r = rows if rows is not None else (arr.shape[0] if arr.ndim == 2 else 0)
        c = cols if cols is not None else (arr.shape[1] if arr.ndim == 2 else 0)
        arr = np.zeros((r, c), dtype=np.complex128)
    elif arr.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got an array with shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise DimensionMismatchError(f"expected {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionMismatchError(f"expected {cols} columns, got {arr.shape[1]}")
    return arr


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def adjoint(M: np.ndarray) -> np.ndarray:
    return np.conj(M).T


def norm2(M: np.ndarray) -> float:
    """Spectral norm; 0 for matrices with a zero dimension."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(sla.svdvals(M, check_finite=False)[0])


def svd(M: np.ndarray, *, full_matrices: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Singular value decomposition M = U diag(s) Vh with descending s.

    Zero-dimensional inputs return correctly shaped empty factors.
    """
    M = as_matrix(M)
    r, c = M.shape
    if M.size == 0:
        k = r if full_matrices else 0
        kk = c if full_matrices else 0
        return identity(r)[:, :k], np.zeros(0), identity(c)[:kk, :]
    u, s, vh = sla.svd(M, full_matrices=full_matrices, check_finite=False, lapack_driver="gesdd")
    return u, s, vh


def _cutoff(s: np.ndarray, t: Tolerances, scale: float | None) -> float:
    reference = float(s[0]) if s.size else 0.0
    if scale is not None:
        reference = max(reference, float(scale))
    return t.rank_rel * reference


def rank_tol(M: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES, *, scale: float | None = None) -> int:
    """
    Number of singular values above rank_rel·σ_max.

    With `scale`, the reference value is max(σ_max, scale); callers working with
    contractions pass scale=1 so that an all-noise matrix is not promoted to full rank.
    """
    M = as_matrix(M)
    if M.size == 0:
        return 0
    s = sla.svdvals(M, check_finite=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > _cutoff(s, t, scale)))


def kernel_basis(M: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES, *, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical null space of M."""
    M = as_matrix(M)
    r, c = M.shape
    if c == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if r == 0:
        return identity(c)
    _, s, vh = sla.svd(M, full_matrices=r < c, check_finite=False)
    if s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(s > _cutoff(s, t, scale)))
    return adjoint(vh[rank:, :])


def hermitian_part(Q: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Return (Q + Q*)/2 after checking that Q is Hermitian within the residual tolerance."""
    Q = as_matrix(Q)
    if Q.shape[0] != Q.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {Q.shape}")
    if Q.size == 0:
        return Q
    skew = norm2(Q - adjoint(Q))
    if skew > t.residual * max(1.0, norm2(Q)):
        raise NonHermitianError(f"matrix is not Hermitian: ||Q - Q*|| = {skew:.3e}")
    return (Q + adjoint(Q)) / 2


def hermitian_eigenvalues(M: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    H = hermitian_part(M, t)
    if H.size == 0:
        return np.zeros(0)
    return sla.eigh(H, eigvals_only=True, check_finite=False)


def eig_one_multiplicity(Q: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES) -> int:
    """Number of eigenvalues of the Hermitian matrix Q with λ ≥ 1 − eig_one."""
    eigs = hermitian_eigenvalues(Q, t)
    return int(np.count_nonzero(eigs >= 1.0 - t.eig_one))


def eig_one_gap(Q: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES) -> float | None:
    """Largest eigenvalue strictly below the unit cutoff, or None when there is none."""
    eigs = hermitian_eigenvalues(Q, t)
    below = eigs[eigs < 1.0 - t.eig_one]
    if below.size == 0:
        return None
    return float(below[-1])


def solve_dense(A: np.ndarray, b: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.complex128)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError(f"expected a square system matrix, got {A.shape}")
    if b.shape[0] != n:
        raise DimensionMismatchError(f"right-hand side has {b.shape[0]} rows, expected {n}")
    if n == 0:
        return np.zeros(b.shape, dtype=np.complex128)
    if rank_tol(A, t) < n:
        raise SingularSystemError("system matrix is rank deficient at tolerance")
    return sla.solve(A, b, check_finite=False)


def eigenvalues(A: np.ndarray) -> np.ndarray:
    A = as_matrix(A)
    if A.size == 0:
        return np.zeros(0, dtype=np.complex128)
    return sla.eigvals(A, check_finite=False)


def spectral_radius(A: np.ndarray) -> float:
    eigs = eigenvalues(A)
    if eigs.size == 0:
        return 0.0
    return float(np.max(np.abs(eigs)))


def matrix_powers(A: np.ndarray, count: int) -> list[np.ndarray]:
    """[I, A, A², ..., A^(count-1)]."""
    A = as_matrix(A)
    out: list[np.ndarray] = []
    current = identity(A.shape[0])
    for _ in range(count):
        out.append(current)
        current = current @ A
    return out


def geometric_tail(A: np.ndarray, start: int) -> float:
    """
    Upper bound for Σ_{j ≥ start} ||A^j|| when the powers of A eventually contract.

    L is the first power with a = ||A^L|| ≤ 1/2 (searched up to max(start, 64)).
    Every j = start + qL + r with r < L satisfies ||A^j|| ≤ ||A^{start+r}||·a^q, hence
    the sum is at most (Σ_{r<L} ||A^{start+r}||) / (1 − a). Returns inf when a is not below 1.
    """
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    start = max(int(start), 1)
    power, L = A, 1
    a = norm2(power)
    while a > 0.5 and L < max(start, 64):
        power = power @ A
        L += 1
        a = norm2(power)
    current = np.linalg.matrix_power(A, start)
    head = 0.0
    for _ in range(L):
        head += norm2(current)
        current = current @ A
    if head == 0.0:
        return 0.0
    if a >= 1.0 - 1e-15:
        return float("inf")
    return head / (1.0 - a)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n×n unitary."""
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if n == 1:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        return np.array([[np.exp(1j * phase)]], dtype=np.complex128)
    from scipy.stats import unitary_group

    return np.asarray(unitary_group.rvs(n, random_state=rng), dtype=np.complex128)
