from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from wh_indices.numerics import (
    DEFAULT_TOLERANCES,
    DimensionMismatchError,
    SingularSystemError,
    Tolerances,
    adjoint,
    as_matrix,
    identity,
    norm2,
    spectral_radius,
)


log = logging.getLogger(__name__)

DIRECT_LIMIT = 4096
UNSTABLE_MARGIN = 1e-12
MAX_DOUBLINGS = 64


class UnstablePairError(RuntimeError):
    pass


@dataclass(frozen=True)
class SteinSolution:
    S: np.ndarray
    residual: float
    strategy: str
    condition: float


def _check_shapes(A1: np.ndarray, A2: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A1 = as_matrix(A1)
    A2 = as_matrix(A2)
    n1, n2 = A1.shape[0], A2.shape[0]
    if A1.shape != (n1, n1) or A2.shape != (n2, n2):
        raise DimensionMismatchError(f"state matrices must be square, got {A1.shape} and {A2.shape}")
    R = as_matrix(R, rows=n1, cols=n2) if np.size(R) == 0 else as_matrix(R)
    if R.shape != (n1, n2):
        raise DimensionMismatchError(f"right-hand side must be {n1}x{n2}, got {R.shape}")
    return A1, A2, R


def _solve_direct(A1: np.ndarray, A2: np.ndarray, R: np.ndarray) -> np.ndarray:
    # Column-major vec: vec(A1 S A2*) = (conj(A2) ⊗ A1) vec(S).
    n1, n2 = R.shape
    K = identity(n1 * n2) - np.kron(np.conj(A2), A1)
    # K is nonsingular whenever rho(A1)·rho(A2) < 1, which stein_solution checks first.
    try:
        vec = sla.solve(K, R.reshape(-1, order="F"), check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("vectorized Stein system is singular") from exc
    return vec.reshape((n1, n2), order="F")


def _solve_doubling(A1: np.ndarray, A2: np.ndarray, R: np.ndarray, t: Tolerances) -> np.ndarray:
    S = R.copy()
    P1, P2 = A1.copy(), adjoint(A2)
    for _ in range(MAX_DOUBLINGS):
        term = P1 @ S @ P2
        S = S + term
        if norm2(term) <= t.residual * 1e-3 * max(norm2(S), 1e-300):
            break
        P1 = P1 @ P1
        P2 = P2 @ P2
        if norm2(P1) == 0.0 or norm2(P2) == 0.0:
            break
    return S


def stein_solution(
    A1: np.ndarray,
    A2: np.ndarray,
    R: np.ndarray,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    direct_limit: int = DIRECT_LIMIT,
    strategy: str | None = None,
) -> SteinSolution:
    """
    Solve S = A1 S A2* + R for stable A1, A2.

    `strategy` forces "direct" or "series"; by default the vectorized solve is used
    while n1·n2 ≤ direct_limit and the doubling series above that.
    """
    A1, A2, R = _check_shapes(A1, A2, R)
    n1, n2 = R.shape
    rho = spectral_radius(A1) * spectral_radius(A2)
    if rho >= 1.0 - UNSTABLE_MARGIN:
        raise UnstablePairError(f"Stein equation is ill-posed: rho(A1)*rho(A2) = {rho:.12f}")
    condition = 1.0 / (1.0 - rho)

    if n1 == 0 or n2 == 0:
        return SteinSolution(S=np.zeros((n1, n2), dtype=np.complex128), residual=0.0, strategy="empty", condition=1.0)

    if strategy is None:
        strategy = "direct" if n1 * n2 <= direct_limit else "series"
    if strategy == "direct":
        S = _solve_direct(A1, A2, R)
    elif strategy == "series":
        S = _solve_doubling(A1, A2, R, t)
    else:
        raise ValueError(f"unknown Stein strategy: {strategy!r}")

    residual = norm2(S - A1 @ S @ adjoint(A2) - R)
    log.debug("Stein %dx%d solved by %s (residual %.3e, condition %.3e)", n1, n2, strategy, residual, condition)
    if residual > t.residual * max(1.0, norm2(R)):
        log.warning("Stein residual %.3e exceeds tolerance (condition %.3e)", residual, condition)
    return SteinSolution(S=S, residual=residual, strategy=strategy, condition=condition)


def solve_stein(
    A1: np.ndarray,
    A2: np.ndarray,
    R: np.ndarray,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    direct_limit: int = DIRECT_LIMIT,
) -> np.ndarray:
    return stein_solution(A1, A2, R, t, direct_limit=direct_limit).S
