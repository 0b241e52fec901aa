from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from concurrent.futures import Executor
from dataclasses import dataclass, replace

import numpy as np

from wh_indices.numerics import (
    DEFAULT_TOLERANCES,
    Tolerances,
    adjoint,
    geometric_tail,
    identity,
    kernel_basis,
    norm2,
)
from wh_indices.realization import Realization, taylor_coefficients
from wh_indices.whindex import c_circ, coupling_omega


log = logging.getLogger(__name__)

# Sections count toward stabilization once the discarded coefficients sum to at most this much.
ADMISSIBLE_TAIL = 1e-6
# Section singular values below this multiple of the tail bound are truncation noise.
TAIL_KERNEL_MARGIN = 10.0
MAX_SERIES_TERMS = 1 << 14


class NoStabilizationError(RuntimeError):
    pass


class FourierMismatchError(RuntimeError):
    pass


@dataclass(frozen=True)
class TruncatedSection:
    """
    Finite block section of a Toeplitz or Hankel operator.

    `levels` block columns and `row_levels` block rows of size `block_size`;
    `tail_bound` bounds the norm of everything the section leaves out.
    """

    block_size: int
    levels: int
    row_levels: int
    matrix: np.ndarray
    tail_bound: float


@dataclass(frozen=True)
class ResidualCheck:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold


@dataclass(frozen=True)
class ResidualReport:
    levels: int
    checks: tuple[ResidualCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)


def pair_tail(V: Realization, W: Realization, start: int) -> float:
    """Bound on Σ_{j ≥ start} (‖A_vʲ‖ + ‖A_wʲ‖), which dominates every discarded coefficient sum."""
    return geometric_tail(V.A, start) + geometric_tail(W.A, start)


class FourierTable:
    """
    Fourier coefficients R_n of R = VW* on the unit circle, computed in closed form.

    R_0 = D_v D_w* + C_v Ω C_w*, R_n = C_v A_v^{n−1}(B_v D_w* + A_v Ω C_w*) and
    R_{−n} = C∘ A_w*^{n−1} C_w* for n ≥ 1. Every coefficient is checked against the
    convolution Σ_k V_{n+k} W_k* when it is first produced.
    """

    def __init__(
        self,
        V: Realization,
        W: Realization,
        t: Tolerances = DEFAULT_TOLERANCES,
        *,
        omega: np.ndarray | None = None,
        verify: bool = True,
    ) -> None:
        self.V = V
        self.W = W
        self.t = t
        self.verify = verify
        self.omega = coupling_omega(V, W, t) if omega is None else omega
        self.m = V.io_dim
        self._coeffs: dict[int, np.ndarray] = {
            0: V.D @ adjoint(W.D) + V.C @ self.omega @ adjoint(W.C),
        }
        self._hi = 0
        self._lo = 0
        self._pos_state = V.B @ adjoint(W.D) + V.A @ self.omega @ adjoint(W.C)
        self._neg_state = c_circ(V, W, self.omega)
        empty = np.zeros((0, self.m, self.m), dtype=np.complex128)
        self._taylor_cache: dict[str, np.ndarray] = {"V": empty, "W": empty}
        self._series_terms, self._series_tail = self._choose_series_terms()
        if verify:
            self._check(0)

    def _choose_series_terms(self) -> tuple[int, float]:
        terms = max(self.V.state_dim + self.W.state_dim, 1)
        tail = pair_tail(self.V, self.W, terms)
        while tail > self.t.residual * 1e-2 and terms < MAX_SERIES_TERMS:
            terms *= 2
            tail = pair_tail(self.V, self.W, terms)
        return terms, tail

    def _taylor(self, which: str, count: int) -> np.ndarray:
        """Stacked Taylor coefficients (count, m, m) of V or W, grown on demand."""
        cache = self._taylor_cache[which]
        if cache.shape[0] < count:
            r = self.V if which == "V" else self.W
            cache = np.array(taylor_coefficients(r, max(count, 2 * cache.shape[0])))
            self._taylor_cache[which] = cache
        return cache[:count]

    def convolution(self, n: int) -> np.ndarray:
        """Σ_k V_{n+k} W_k* over the chosen number of terms."""
        start = max(0, -n)
        stop = start + self._series_terms
        v = self._taylor("V", n + stop)[n + start : n + stop]
        w = self._taylor("W", stop)[start:stop]
        return np.einsum("kab,kcb->ac", v, np.conj(w))

    def _check(self, n: int) -> None:
        expected = self.convolution(n)
        diff = norm2(self._coeffs[n] - expected)
        threshold = self.t.residual * max(1.0, norm2(expected)) + self._series_tail
        if diff > threshold:
            raise FourierMismatchError(f"R_{n} differs from its convolution series by {diff:.3e}")

    def ensure(self, lo: int, hi: int) -> None:
        while self._hi < hi:
            n = self._hi + 1
            self._coeffs[n] = self.V.C @ self._pos_state
            self._pos_state = self.V.A @ self._pos_state
            self._hi = n
            if self.verify:
                self._check(n)
        while self._lo > lo:
            n = self._lo - 1
            self._coeffs[n] = self._neg_state @ adjoint(self.W.C)
            self._neg_state = self._neg_state @ adjoint(self.W.A)
            self._lo = n
            if self.verify:
                self._check(n)

    def __getitem__(self, n: int) -> np.ndarray:
        self.ensure(min(n, 0), max(n, 0))
        return self._coeffs[n]


def fourier_R(
    V: Realization,
    W: Realization,
    n: int,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    omega: np.ndarray | None = None,
) -> np.ndarray:
    return FourierTable(V, W, t, omega=omega)[n]


def fourier_coefficients(
    V: Realization,
    W: Realization,
    lo: int,
    hi: int,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    omega: np.ndarray | None = None,
) -> dict[int, np.ndarray]:
    table = FourierTable(V, W, t, omega=omega)
    table.ensure(lo, hi)
    return {n: table[n] for n in range(lo, hi + 1)}


Coefficients = Callable[[int], np.ndarray] | Mapping[int, np.ndarray]


def truncated_toeplitz(
    coeffs: Coefficients,
    N: int,
    *,
    block_size: int,
    row_levels: int | None = None,
    shift: int = 0,
    tail_bound: float = 0.0,
) -> TruncatedSection:
    """
    Block (i, j) = coeffs[i − j − shift] for i < row_levels, j < N.

    Missing indices of a mapping are zero blocks; `shift` = k gives the section of T_{zᵏΘ}.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rows = N if row_levels is None else int(row_levels)
    m = block_size
    if isinstance(coeffs, Mapping):
        zero = np.zeros((m, m), dtype=np.complex128)
        lookup: Callable[[int], np.ndarray] = lambda n: coeffs.get(n, zero)  # noqa: E731
    else:
        lookup = coeffs
    lo = -(N - 1) - shift
    stack = np.stack([lookup(n) for n in range(lo, rows - shift)])
    offsets = np.subtract.outer(np.arange(rows), np.arange(N)) - shift - lo
    M = stack[offsets].transpose(0, 2, 1, 3).reshape(rows * m, N * m)
    return TruncatedSection(block_size=m, levels=N, row_levels=rows, matrix=M, tail_bound=tail_bound)


def analytic_toeplitz(r: Realization, N: int) -> TruncatedSection:
    """Lower triangular section of T_Θ."""
    coeffs = dict(enumerate(taylor_coefficients(r, N)))
    return truncated_toeplitz(coeffs, N, block_size=r.io_dim, tail_bound=geometric_tail(r.A, N))


def observability_section(r: Realization, N: int) -> np.ndarray:
    """[C; CA; ...; CA^{N−1}]."""
    blocks = []
    current = np.array(r.C, dtype=np.complex128)
    for _ in range(N):
        blocks.append(current)
        current = current @ r.A
    return np.vstack(blocks)


def controllability_section(r: Realization, N: int) -> np.ndarray:
    """[B, AB, ..., A^{N−1}B]."""
    blocks = []
    current = np.array(r.B, dtype=np.complex128)
    for _ in range(N):
        blocks.append(current)
        current = r.A @ current
    return np.hstack(blocks)


def truncated_hankel(r: Realization, N: int) -> TruncatedSection:
    """Block (i, j) = Θ_{i+j+1}, built as Γ_N Υ_N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    M = observability_section(r, N) @ controllability_section(r, N)
    return TruncatedSection(
        block_size=r.io_dim,
        levels=N,
        row_levels=N,
        matrix=M,
        tail_bound=geometric_tail(r.A, N),
    )


def _growth_step(V: Realization, W: Realization) -> int:
    return max(V.state_dim + W.state_dim, 1)


def default_n_max(V: Realization, W: Realization, k_max: int) -> int:
    return 16 * (V.state_dim + W.state_dim + max(k_max, 0)) or 16


def _section_kernel_dim(table: FourierTable, N: int, k: int, t: Tolerances, tail: float = 0.0) -> int:
    section = truncated_toeplitz(table.__getitem__, N, block_size=table.m, row_levels=2 * N, shift=k)
    cutoff = replace(t, rank_rel=max(t.rank_rel, TAIL_KERNEL_MARGIN * tail))
    return kernel_basis(section.matrix, cutoff, scale=1.0).shape[1]


def stabilized_kernel_dim(
    table: FourierTable,
    k: int,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    n_max: int | None = None,
) -> int:
    """
    dim ker T_{zᵏR} from rectangular sections (2N block rows, N block columns).

    N starts at Δ + k + 1 and grows by Δ = dim X_v + dim X_w. A section is admissible
    once its coefficient tail is at most ADMISSIBLE_TAIL; its kernel cutoff is then
    raised to TAIL_KERNEL_MARGIN times the tail, since truncating a kernel vector of
    the full operator leaves a residual of that order. The answer is the first value
    two consecutive admissible sections agree on.
    """
    V, W = table.V, table.W
    step = _growth_step(V, W)
    limit = default_n_max(V, W, k) if n_max is None else int(n_max)
    N = step + k + 1
    previous: int | None = None
    history: list[tuple[int, int]] = []
    while N <= limit:
        tail = pair_tail(V, W, N)
        if tail <= ADMISSIBLE_TAIL:
            dim = _section_kernel_dim(table, N, k, t, tail)
            history.append((N, dim))
            log.debug("k = %d, N = %d: section kernel dimension %d (tail %.2e)", k, N, dim, tail)
            if previous is not None and dim == previous:
                return dim
            previous = dim
        N += step
    raise NoStabilizationError(f"kernel dimension of T_(z^{k} R) did not stabilize by N = {limit}: {history}")


def oracle_kernel_dims(
    V: Realization,
    W: Realization,
    k_max: int,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    n_max: int | None = None,
    executor: Executor | None = None,
    omega: np.ndarray | None = None,
) -> tuple[int, ...]:
    """Brute-force dim ker T_{zᵏR} for k = 0..k_max from finite sections."""
    table = FourierTable(V, W, t, omega=omega)
    if n_max is None:
        n_max = default_n_max(V, W, k_max)
    # Fill the table up front so that worker threads only read it.
    table.ensure(-(n_max + k_max), 2 * n_max)
    ks = list(range(k_max + 1))
    if executor is not None:
        dims = list(executor.map(lambda k: stabilized_kernel_dim(table, k, t, n_max=n_max), ks))
    else:
        dims = [stabilized_kernel_dim(table, k, t, n_max=n_max) for k in ks]
    return tuple(dims)


def oracle_cokernel_dims(
    V: Realization,
    W: Realization,
    k_max: int,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    n_max: int | None = None,
    executor: Executor | None = None,
) -> tuple[int, ...]:
    """Kernel dimensions for R* = WV*, whose negative indices are the positive indices of R negated."""
    return oracle_kernel_dims(W, V, k_max, t, n_max=n_max, executor=executor)


def verify_decomposition(
    V: Realization,
    W: Realization,
    N: int,
    t: Tolerances = DEFAULT_TOLERANCES,
    *,
    omega: np.ndarray | None = None,
) -> ResidualReport:
    """
    Check T_R = T_V T_W* + H_V H_W* on N×N block sections.

    The Toeplitz product is exact on a section because both factors are lower
    triangular; the Hankel product misses Σ_{l ≥ N} V_{i+l+1} W_{j+l+1}*, which is
    bounded by the geometric tail of either state matrix.
    """
    m = V.io_dim
    table = FourierTable(V, W, t, omega=omega)
    table.ensure(-(N - 1), N - 1)
    T_R = truncated_toeplitz(table.__getitem__, N, block_size=m).matrix
    T_V = analytic_toeplitz(V, N).matrix
    T_W = analytic_toeplitz(W, N).matrix
    H_V = truncated_hankel(V, N).matrix
    H_W = truncated_hankel(W, N).matrix
    residual = norm2(T_R - T_V @ adjoint(T_W) - H_V @ adjoint(H_W))
    tail = min(geometric_tail(V.A, N), geometric_tail(W.A, N))
    check = ResidualCheck(name="T_R = T_V T_W* + H_V H_W*", residual=residual, threshold=t.residual + tail)
    return ResidualReport(levels=N, checks=(check,))


def verify_realization_identities(r: Realization, N: int, t: Tolerances = DEFAULT_TOLERANCES) -> ResidualReport:
    """
    Finite-section checks of T T* + H H* = I and T*T = I, plus the exact identities
    Γ_N*Γ_N = I − A*ᴺAᴺ and Υ_NΥ_N* = I − AᴺA*ᴺ.

    T*T is compared on the leading N − N//2 blocks, where the discarded part is bounded
    by the tail from N//2 on.
    """
    m, n = r.io_dim, r.state_dim
    T = analytic_toeplitz(r, N).matrix
    H = truncated_hankel(r, N).matrix
    eye = identity(N * m)

    coiso = norm2(T @ adjoint(T) + H @ adjoint(H) - eye)
    coiso_threshold = t.residual + geometric_tail(r.A, N)

    d = N // 2
    lead = (N - d) * m
    iso = norm2((adjoint(T) @ T)[:lead, :lead] - identity(lead))
    iso_threshold = t.residual + geometric_tail(r.A, d)

    A_N = np.linalg.matrix_power(r.A, N) if n else r.A
    gamma = observability_section(r, N)
    upsilon = controllability_section(r, N)
    obs = norm2(adjoint(gamma) @ gamma - (identity(n) - adjoint(A_N) @ A_N))
    ctrl = norm2(upsilon @ adjoint(upsilon) - (identity(n) - A_N @ adjoint(A_N)))

    checks = (
        ResidualCheck(name="T T* + H H* = I", residual=coiso, threshold=coiso_threshold),
        ResidualCheck(name="T* T = I (leading blocks)", residual=iso, threshold=iso_threshold),
        ResidualCheck(name="Γ*Γ = I - A*^N A^N", residual=obs, threshold=t.residual),
        ResidualCheck(name="ΥΥ* = I - A^N A*^N", residual=ctrl, threshold=t.residual),
    )
    for c in checks:
        if not c.passed:
            log.warning("Realization identity check failed: %s (residual %.3e > %.3e)", c.name, c.residual, c.threshold)
    return ResidualReport(levels=N, checks=checks)
