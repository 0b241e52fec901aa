from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class IndexDiagnostics:
    """
    Numerical health data attached to an index report.

    Eigenvalue gaps hold, per k, the largest eigenvalue that fell below the unit cutoff
    (None when every eigenvalue counted as 1). Fields a particular pipeline does not
    compute stay None.
    """

    kernel_gaps: tuple[float | None, ...] = ()
    cokernel_gaps: tuple[float | None, ...] = ()
    stein_residual: float | None = None
    stein_condition: float | None = None
    q_residual: float | None = None
    q_star_residual: float | None = None
    omega_star_mismatch: float | None = None
    kernel_omega: int | None = None
    kernel_omega_adjoint: int | None = None
    state_dim_difference: int | None = None
    rank_y: int | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class IndexReport:
    negative_indices: tuple[int, ...]
    positive_indices: tuple[int, ...]
    zero_count: int
    kernel_dims: tuple[int, ...]
    cokernel_dims: tuple[int, ...]
    mu: tuple[int, ...]
    nu: tuple[int, ...]
    n_tr: int
    d_tr: int
    fredholm_index: int
    diagnostics: IndexDiagnostics = field(default_factory=IndexDiagnostics)

    @property
    def io_dim(self) -> int:
        return len(self.negative_indices) + len(self.positive_indices) + self.zero_count

    @property
    def indices(self) -> tuple[int, ...]:
        """All partial indices in ascending order, zeros included."""
        return tuple(sorted(self.negative_indices + (0,) * self.zero_count + self.positive_indices))

    @property
    def winding_number(self) -> int:
        return sum(self.indices)

    @property
    def invertible(self) -> bool:
        return self.n_tr == 0 and self.d_tr == 0

    def same_indices(self, other: "IndexReport") -> bool:
        return (
            self.indices == other.indices
            and self.kernel_dims == other.kernel_dims
            and self.cokernel_dims == other.cokernel_dims
            and self.n_tr == other.n_tr
            and self.d_tr == other.d_tr
        )
