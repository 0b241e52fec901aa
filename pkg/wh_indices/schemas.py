from __future__ import annotations

import json
import math
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as PydanticValidationError

from wh_indices.blaschke import BlaschkeProduct
from wh_indices.numerics import DimensionMismatchError
from wh_indices.realization import Realization, ValidationReport
from wh_indices.reports import IndexDiagnostics, IndexReport


class ProblemFileError(ValueError):
    pass


ComplexEntry = tuple[float, float]
Matrix = list[list[ComplexEntry]]


def _finite(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def _to_array(rows: Matrix, field: str) -> np.ndarray:
    if not rows:
        return np.zeros((0, 0), dtype=np.complex128)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ProblemFileError(f"{field}[{i}]: expected {width} entries, got {len(row)}")
    if width == 0:
        return np.zeros((len(rows), 0), dtype=np.complex128)
    raw = np.asarray(rows, dtype=np.float64)
    return raw[..., 0] + 1j * raw[..., 1]


def _from_array(M: np.ndarray) -> Matrix:
    return [[(float(z.real), float(z.imag)) for z in row] for row in np.asarray(M)]


def _complex(entry: ComplexEntry) -> complex:
    return complex(entry[0], entry[1])


class RealizationModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    A: Matrix = Field(default_factory=list)
    B: Matrix = Field(default_factory=list)
    C: Matrix = Field(default_factory=list)
    D: Matrix

    def to_realization(self, field: str = "realization") -> Realization:
        arrays = {name: _to_array(getattr(self, name), f"{field}.{name}") for name in ("A", "B", "C", "D")}
        try:
            return Realization(**arrays)
        except DimensionMismatchError as exc:
            raise ProblemFileError(f"{field}: {exc}") from exc

    @staticmethod
    def from_realization(r: Realization) -> "RealizationModel":
        return RealizationModel(A=_from_array(r.A), B=_from_array(r.B), C=_from_array(r.C), D=_from_array(r.D))


class PairProblem(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str | None = None
    V: RealizationModel
    W: RealizationModel

    def realizations(self) -> tuple[Realization, Realization]:
        return self.V.to_realization("V"), self.W.to_realization("W")

    @staticmethod
    def from_realizations(V: Realization, W: Realization, *, name: str | None = None) -> "PairProblem":
        return PairProblem(
            name=name,
            V=RealizationModel.from_realization(V),
            W=RealizationModel.from_realization(W),
        )


class BlaschkeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    zeta: ComplexEntry = (1.0, 0.0)
    zeros: list[ComplexEntry] = Field(default_factory=list)

    def to_blaschke(self) -> BlaschkeProduct:
        return BlaschkeProduct(zeta=_complex(self.zeta), zeros=tuple(_complex(a) for a in self.zeros))

    @staticmethod
    def from_blaschke(b: BlaschkeProduct) -> "BlaschkeModel":
        return BlaschkeModel(
            zeta=(b.zeta.real, b.zeta.imag),
            zeros=[(a.real, a.imag) for a in b.zeros],
        )


class ScalarProblem(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str | None = None
    phi: BlaschkeModel
    m: BlaschkeModel

    def products(self) -> tuple[BlaschkeProduct, BlaschkeProduct]:
        return self.phi.to_blaschke(), self.m.to_blaschke()


def _format_loc(loc: tuple[Any, ...]) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def parse_problem(text: str, source: str = "<input>") -> PairProblem | ScalarProblem:
    """
    Parse a problem document: {"V": ..., "W": ...} or {"phi": ..., "m": ...}.

    Complex entries are [re, im] pairs; an empty list is a matrix with a zero dimension.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ProblemFileError(f"{source}: top level must be a JSON object")
    if "V" in data or "W" in data:
        model: type[BaseModel] = PairProblem
    elif "phi" in data or "m" in data:
        model = ScalarProblem
    else:
        raise ProblemFileError(f"{source}: expected keys V/W (matrix problem) or phi/m (scalar problem)")
    try:
        return model.model_validate(data)  # type: ignore[return-value]
    except PydanticValidationError as exc:
        first = exc.errors()[0]
        raise ProblemFileError(f"{source}: {_format_loc(tuple(first['loc']))}: {first['msg']}") from exc


class ValidationModel(BaseModel):
    isometry_residual: float | None
    coisometry_residual: float | None
    spectral_radius: float | None
    passed: bool
    margin_warning: bool

    @staticmethod
    def from_report(report: ValidationReport) -> "ValidationModel":
        return ValidationModel(
            isometry_residual=_finite(report.isometry_residual),
            coisometry_residual=_finite(report.coisometry_residual),
            spectral_radius=_finite(report.spectral_radius),
            passed=report.passed,
            margin_warning=report.margin_warning,
        )


class DiagnosticsModel(BaseModel):
    kernel_gaps: list[float | None] = Field(default_factory=list)
    cokernel_gaps: list[float | None] = Field(default_factory=list)
    stein_residual: float | None = None
    stein_condition: float | None = None
    q_residual: float | None = None
    q_star_residual: float | None = None
    omega_star_mismatch: float | None = None
    kernel_omega: int | None = None
    kernel_omega_adjoint: int | None = None
    state_dim_difference: int | None = None
    rank_y: int | None = None
    warnings: list[str] = Field(default_factory=list)

    @staticmethod
    def from_diagnostics(d: IndexDiagnostics) -> "DiagnosticsModel":
        return DiagnosticsModel(
            kernel_gaps=[_finite(g) for g in d.kernel_gaps],
            cokernel_gaps=[_finite(g) for g in d.cokernel_gaps],
            stein_residual=_finite(d.stein_residual),
            stein_condition=_finite(d.stein_condition),
            q_residual=_finite(d.q_residual),
            q_star_residual=_finite(d.q_star_residual),
            omega_star_mismatch=_finite(d.omega_star_mismatch),
            kernel_omega=d.kernel_omega,
            kernel_omega_adjoint=d.kernel_omega_adjoint,
            state_dim_difference=d.state_dim_difference,
            rank_y=d.rank_y,
            warnings=list(d.warnings),
        )


class IndexReportModel(BaseModel):
    name: str | None = None
    indices: list[int]
    negative_indices: list[int]
    positive_indices: list[int]
    zero_count: int
    kernel_dims: list[int]
    cokernel_dims: list[int]
    mu: list[int]
    nu: list[int]
    n_tr: int
    d_tr: int
    fredholm_index: int
    winding_number: int
    diagnostics: DiagnosticsModel
    validation: dict[str, ValidationModel] = Field(default_factory=dict)

    @staticmethod
    def from_report(
        report: IndexReport,
        *,
        name: str | None = None,
        validation: dict[str, ValidationReport] | None = None,
    ) -> "IndexReportModel":
        return IndexReportModel(
            name=name,
            indices=list(report.indices),
            negative_indices=list(report.negative_indices),
            positive_indices=list(report.positive_indices),
            zero_count=report.zero_count,
            kernel_dims=list(report.kernel_dims),
            cokernel_dims=list(report.cokernel_dims),
            mu=list(report.mu),
            nu=list(report.nu),
            n_tr=report.n_tr,
            d_tr=report.d_tr,
            fredholm_index=report.fredholm_index,
            winding_number=report.winding_number,
            diagnostics=DiagnosticsModel.from_diagnostics(report.diagnostics),
            validation={k: ValidationModel.from_report(v) for k, v in (validation or {}).items()},
        )


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str = ""
    residual: float | None = None
    threshold: float | None = None


class VerificationModel(BaseModel):
    name: str | None = None
    passed: bool
    checks: list[CheckModel]
    report: IndexReportModel | None = None


def dump_json(model: BaseModel) -> str:
    return model.model_dump_json(indent=2) + "\n"
