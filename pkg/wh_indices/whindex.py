from __future__ import annotations

import logging
from concurrent.futures import Executor
from dataclasses import dataclass

import numpy as np

from wh_indices.numerics import (
    DEFAULT_TOLERANCES,
    DimensionMismatchError,
    Tolerances,
    adjoint,
    as_matrix,
    eig_one_gap,
    eig_one_multiplicity,
    hermitian_part,
    identity,
    kernel_basis,
    matrix_powers,
    norm2,
)
from wh_indices.realization import Realization
from wh_indices.reports import IndexDiagnostics, IndexReport
from wh_indices.stein import DIRECT_LIMIT, SteinSolution, solve_stein, stein_solution


log = logging.getLogger(__name__)

# Eigenvalues this close to the unit cutoff (in multiples of eig_one) are reported as borderline.
BORDERLINE_FACTOR = 1e3


class NonMonotoneError(RuntimeError):
    pass


class MalformedSequenceError(ValueError):
    pass


class InconsistentIndexCountError(RuntimeError):
    pass


def _check_pair(V: Realization, W: Realization) -> None:
    if V.io_dim != W.io_dim:
        raise DimensionMismatchError(f"V and W must have the same I/O dimension, got {V.io_dim} and {W.io_dim}")


def coupling_solution(
    V: Realization, W: Realization, t: Tolerances = DEFAULT_TOLERANCES, *, direct_limit: int = DIRECT_LIMIT
) -> SteinSolution:
    _check_pair(V, W)
    return stein_solution(V.A, W.A, V.B @ adjoint(W.B), t, direct_limit=direct_limit)


def coupling_omega(
    V: Realization, W: Realization, t: Tolerances = DEFAULT_TOLERANCES, *, direct_limit: int = DIRECT_LIMIT
) -> np.ndarray:
    """Ω solving Ω = A_v Ω A_w* + B_v B_w*."""
    return coupling_solution(V, W, t, direct_limit=direct_limit).S


def c_circ(V: Realization, W: Realization, Omega: np.ndarray) -> np.ndarray:
    """C∘ = D_v B_w* + C_v Ω A_w*."""
    _check_pair(V, W)
    Omega = as_matrix(Omega, rows=V.state_dim, cols=W.state_dim)
    return V.D @ adjoint(W.B) + V.C @ Omega @ adjoint(W.A)


def gram_q(
    W: Realization, Ccirc: np.ndarray, t: Tolerances = DEFAULT_TOLERANCES, *, direct_limit: int = DIRECT_LIMIT
) -> np.ndarray:
    """Q = A_w Q A_w* + C∘*C∘, returned symmetrized."""
    Ccirc = as_matrix(Ccirc, rows=W.io_dim, cols=W.state_dim)
    Q = solve_stein(W.A, W.A, adjoint(Ccirc) @ Ccirc, t, direct_limit=direct_limit)
    return hermitian_part(Q, t)


@dataclass(frozen=True)
class KernelScan:
    dims: tuple[int, ...]
    gaps: tuple[float | None, ...]


def _multiplicity_at(args: tuple[np.ndarray, np.ndarray, Tolerances]) -> tuple[int, float | None]:
    Ak, Q, t = args
    M = Ak @ Q @ adjoint(Ak)
    return eig_one_multiplicity(M, t), eig_one_gap(M, t)


def kernel_scan(
    A_w: np.ndarray,
    Q: np.ndarray,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    executor: Executor | None = None,
) -> KernelScan:
    """
    n_k = multiplicity of 1 in A_wᵏ Q A_w*ᵏ for k = 0, 1, ... up to the first zero.

    The index k never needs to exceed dim X_w + 1. With an executor every k up to that
    cap is evaluated through `executor.map` (order preserving) and the result is cut at
    the first zero, so the outcome is the same as the sequential scan.
    """
    A_w = as_matrix(A_w)
    n = A_w.shape[0]
    Q = as_matrix(Q, rows=n, cols=n)
    cap = n + 1
    powers = matrix_powers(A_w, cap + 1)

    if executor is not None:
        results = list(executor.map(_multiplicity_at, [(Ak, Q, t) for Ak in powers]))
    else:
        results = []
        for Ak in powers:
            results.append(_multiplicity_at((Ak, Q, t)))
            if results[-1][0] == 0:
                break

    dims: list[int] = []
    gaps: list[float | None] = []
    for k, (dim, gap) in enumerate(results):
        if dims and dim > dims[-1]:
            raise NonMonotoneError(f"kernel dimensions increase at k = {k}: {dims[-1]} -> {dim}")
        dims.append(dim)
        gaps.append(gap)
        log.debug("n_%d = %d (largest eigenvalue below cutoff: %s)", k, dim, gap)
        if dim == 0:
            return KernelScan(dims=tuple(dims), gaps=tuple(gaps))
    raise NonMonotoneError(f"kernel dimensions did not reach 0 by k = {cap}: {dims}")


def kernel_dim_sequence(
    A_w: np.ndarray,
    Q: np.ndarray,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    executor: Executor | None = None,
) -> tuple[int, ...]:
    return kernel_scan(A_w, Q, t, executor=executor).dims


def indices_from_dims(dims: tuple[int, ...] | list[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """
    Conjugate-partition transform of a kernel-dimension sequence.

    μ_k = n_{k−1} − n_k and κ_j = #{k : μ_k ≥ j}. Returns (κ, μ) with κ nonincreasing.
    """
    dims = [int(d) for d in dims]
    if not dims:
        raise MalformedSequenceError("dimension sequence is empty")
    if any(d < 0 for d in dims):
        raise MalformedSequenceError(f"dimension sequence has negative entries: {dims}")
    if dims[-1] != 0:
        raise MalformedSequenceError(f"dimension sequence must end at 0: {dims}")
    mu = []
    for k in range(1, len(dims)):
        step = dims[k - 1] - dims[k]
        if step < 0:
            raise MalformedSequenceError(f"dimension sequence increases at position {k}: {dims}")
        mu.append(step)
    kappa = tuple(sum(1 for m in mu if m >= j) for j in range(1, (mu[0] if mu else 0) + 1))
    return kappa, tuple(mu)


@dataclass(frozen=True)
class DualResult:
    omega_star: np.ndarray
    c_circ_star: np.ndarray
    q_star: np.ndarray
    cokernel_dims: tuple[int, ...]
    nu: tuple[int, ...]
    positive_indices: tuple[int, ...]
    gaps: tuple[float | None, ...]
    omega_star_mismatch: float | None


def dual_pipeline(
    V: Realization,
    W: Realization,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    omega: np.ndarray | None = None,
    executor: Executor | None = None,
    direct_limit: int = DIRECT_LIMIT,
) -> DualResult:
    """
    Positive indices from the adjoint orientation R* = WV*.

    Ω★ solves Ω★ = A_w Ω★ A_v* + B_w B_v* and is compared with Ω* when Ω is given.
    """
    _check_pair(V, W)
    omega_star = solve_stein(W.A, V.A, W.B @ adjoint(V.B), t, direct_limit=direct_limit)
    mismatch: float | None = None
    if omega is not None:
        mismatch = norm2(omega_star - adjoint(as_matrix(omega, rows=V.state_dim, cols=W.state_dim)))
    c_star = W.D @ adjoint(V.B) + W.C @ omega_star @ adjoint(V.A)
    q_star = gram_q(V, c_star, t, direct_limit=direct_limit)
    scan = kernel_scan(V.A, q_star, t, executor=executor)
    omega_idx, nu = indices_from_dims(scan.dims)
    return DualResult(
        omega_star=omega_star,
        c_circ_star=c_star,
        q_star=q_star,
        cokernel_dims=scan.dims,
        nu=nu,
        positive_indices=tuple(sorted(omega_idx)),
        gaps=scan.gaps,
        omega_star_mismatch=mismatch,
    )


def _borderline(gaps: tuple[float | None, ...], t: Tolerances) -> list[int]:
    limit = 1.0 - BORDERLINE_FACTOR * t.eig_one
    return [k for k, g in enumerate(gaps) if g is not None and g >= limit]


def full_report(
    V: Realization,
    W: Realization,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    executor: Executor | None = None,
    direct_limit: int = DIRECT_LIMIT,
) -> IndexReport:
    """Complete Wiener-Hopf index data of R = VW* from the two realizations."""
    _check_pair(V, W)
    m = V.io_dim
    coupling = coupling_solution(V, W, t, direct_limit=direct_limit)
    Omega = coupling.S
    Q = gram_q(W, c_circ(V, W, Omega), t, direct_limit=direct_limit)
    scan = kernel_scan(W.A, Q, t, executor=executor)
    kappa, mu = indices_from_dims(scan.dims)
    dual = dual_pipeline(V, W, t, omega=Omega, executor=executor, direct_limit=direct_limit)

    warnings: list[str] = []
    q_residual = norm2(Q - (identity(W.state_dim) - adjoint(Omega) @ Omega))
    q_star_residual = norm2(dual.q_star - (identity(V.state_dim) - Omega @ adjoint(Omega)))
    if max(q_residual, q_star_residual) > t.residual:
        warnings.append(f"Q differs from I - Ω*Ω by {max(q_residual, q_star_residual):.3e}")
    if dual.omega_star_mismatch is not None and dual.omega_star_mismatch > t.residual * max(1.0, norm2(Omega)):
        warnings.append(f"dual coupling mismatch {dual.omega_star_mismatch:.3e}")

    p, q = len(kappa), len(dual.positive_indices)
    zero_count = m - p - q
    if zero_count < 0:
        raise InconsistentIndexCountError(
            f"{p} negative and {q} positive indices exceed the dimension {m}; "
            f"eigenvalue gaps: kernel {scan.gaps}, cokernel {dual.gaps}"
        )

    n_tr = scan.dims[0]
    d_tr = dual.cokernel_dims[0]
    kernel_omega = kernel_basis(Omega, t, scale=1.0).shape[1]
    kernel_omega_adjoint = kernel_basis(adjoint(Omega), t, scale=1.0).shape[1]
    if kernel_omega != n_tr or kernel_omega_adjoint != d_tr:
        warnings.append(
            f"coupling kernels ({kernel_omega}, {kernel_omega_adjoint}) disagree with (n_TR, d_TR) = ({n_tr}, {d_tr})"
        )

    negative = tuple(sorted(-k for k in kappa))
    index_sum = sum(negative) + sum(dual.positive_indices)
    state_dim_difference = V.state_dim - W.state_dim
    if index_sum != state_dim_difference:
        warnings.append(f"index sum {index_sum} differs from dim X_v - dim X_w = {state_dim_difference}")

    for label, gaps in (("kernel", scan.gaps), ("cokernel", dual.gaps)):
        close = _borderline(gaps, t)
        if close:
            warnings.append(f"{label} eigenvalues close to the unit cutoff at k = {close}")

    for message in warnings:
        log.warning(message)

    diagnostics = IndexDiagnostics(
        kernel_gaps=scan.gaps,
        cokernel_gaps=dual.gaps,
        stein_residual=coupling.residual,
        stein_condition=coupling.condition,
        q_residual=q_residual,
        q_star_residual=q_star_residual,
        omega_star_mismatch=dual.omega_star_mismatch,
        kernel_omega=kernel_omega,
        kernel_omega_adjoint=kernel_omega_adjoint,
        state_dim_difference=state_dim_difference,
        warnings=tuple(warnings),
    )
    return IndexReport(
        negative_indices=negative,
        positive_indices=dual.positive_indices,
        zero_count=zero_count,
        kernel_dims=scan.dims,
        cokernel_dims=dual.cokernel_dims,
        mu=mu,
        nu=dual.nu,
        n_tr=n_tr,
        d_tr=d_tr,
        fredholm_index=n_tr - d_tr,
        diagnostics=diagnostics,
    )


def _chain_blocks(V: Realization, W: Realization, omega: np.ndarray) -> np.ndarray:
    """[B_w*; X A_w*] with X = Ω."""
    return np.vstack([adjoint(W.B), omega @ adjoint(W.A)])


def kernel_chain_dims(
    V: Realization,
    W: Realization,
    k_max: int,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    omega: np.ndarray | None = None,
) -> tuple[int, ...]:
    """
    c_0 = dim ker X and c_k = dim ⋂_{j<k} ker([B_w*; X A_w*] A_w*ʲ) for k = 1..k_max.

    c_k coincides with n_k = dim ker(I − A_wᵏ Q A_w*ᵏ) of the main pipeline.
    """
    _check_pair(V, W)
    if omega is None:
        omega = coupling_omega(V, W, t)
    omega = as_matrix(omega, rows=V.state_dim, cols=W.state_dim)
    dims = [kernel_basis(omega, t, scale=1.0).shape[1]]
    if k_max <= 0:
        return tuple(dims)
    block = _chain_blocks(V, W, omega)
    adj = adjoint(W.A)
    rows: list[np.ndarray] = []
    current = block
    for _ in range(k_max):
        rows.append(current)
        stacked = np.vstack(rows)
        dims.append(kernel_basis(stacked, t, scale=1.0).shape[1])
        current = current @ adj
    return tuple(dims)


def negative_index_count(
    V: Realization, W: Realization, t: Tolerances = DEFAULT_TOLERANCES, *, omega: np.ndarray | None = None
) -> int:
    """Number of negative indices: dim ker X − dim ker [B_w*; X A_w*]."""
    c = kernel_chain_dims(V, W, 1, t, omega=omega)
    return c[0] - c[1]
