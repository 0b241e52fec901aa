from __future__ import annotations

import atexit
import logging
import math
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

from wh_indices.blaschke import BlaschkeProduct, scalar_index_report
from wh_indices.config import Settings
from wh_indices.numerics import Tolerances
from wh_indices.oracle import (
    ResidualCheck,
    oracle_cokernel_dims,
    oracle_kernel_dims,
    verify_realization_identities,
    verify_decomposition,
)
from wh_indices.realization import Realization, ValidationReport, blaschke_realization, validate
from wh_indices.reports import IndexReport
from wh_indices.schemas import (
    CheckModel,
    IndexReportModel,
    PairProblem,
    ScalarProblem,
    VerificationModel,
)
from wh_indices.whindex import full_report, kernel_chain_dims, negative_index_count


log = logging.getLogger(__name__)

MIN_SECTION_LEVELS = 12


class RealizationValidationError(ValueError):
    def __init__(self, message: str, reports: dict[str, ValidationReport]) -> None:
        super().__init__(message)
        self.reports = reports


@lru_cache(maxsize=None)
def _shared_executor(max_workers: int) -> ThreadPoolExecutor:
    executor = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="wh-indices")
    atexit.register(executor.shutdown, wait=False, cancel_futures=True)
    return executor


@dataclass(frozen=True)
class IndexOutcome:
    report: IndexReport
    validation: dict[str, ValidationReport]
    model: IndexReportModel


@dataclass(frozen=True)
class ScalarOutcome:
    report: IndexReport
    model: IndexReportModel
    cross_check: bool | None
    matrix_report: IndexReport | None


@dataclass(frozen=True)
class VerificationOutcome:
    report: IndexReport
    model: VerificationModel

    @property
    def passed(self) -> bool:
        return self.model.passed


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _residual_check(check: ResidualCheck, prefix: str = "") -> CheckModel:
    return CheckModel(
        name=f"{prefix}{check.name}",
        passed=check.passed,
        residual=_finite_or_none(check.residual),
        threshold=_finite_or_none(check.threshold),
    )


def _equality_check(name: str, got: tuple[int, ...] | int, expected: tuple[int, ...] | int) -> CheckModel:
    passed = got == expected
    return CheckModel(name=name, passed=passed, detail=f"got {got}, expected {expected}")


class IndexService:
    """
    Runs the index pipelines with one set of tolerances and a shared worker pool.

    Per-k kernel computations go through `executor.map`, which keeps results in
    submission order, so reports do not depend on scheduling.
    """

    def __init__(
        self,
        *,
        settings: Settings | None = None,
        tolerances: Tolerances | None = None,
        oracle_n_max: int | None = None,
        executor: Executor | None = None,
    ) -> None:
        self._settings = settings or Settings.from_env()
        self._tol = tolerances or self._settings.tolerances()
        self._oracle_n_max = oracle_n_max if oracle_n_max is not None else self._settings.oracle_n_max
        self._direct_limit = self._settings.stein_direct_limit
        self._executor = executor or _shared_executor(self._settings.max_workers)

    @property
    def tolerances(self) -> Tolerances:
        return self._tol

    def _realizations(
        self, problem: PairProblem | tuple[Realization, Realization], *, check: bool
    ) -> tuple[Realization, Realization, dict[str, ValidationReport]]:
        V, W = problem.realizations() if isinstance(problem, PairProblem) else problem
        reports = {"V": validate(V, self._tol), "W": validate(W, self._tol)}
        failed = [label for label, r in reports.items() if not r.passed]
        if failed:
            details = "; ".join(f"{label}: {reports[label].describe()}" for label in failed)
            if check:
                raise RealizationValidationError(f"realization is not stable and unitary ({details})", reports)
            log.warning("Continuing with unvalidated realizations (%s)", details)
        return V, W, reports

    def _full_report(self, V: Realization, W: Realization) -> IndexReport:
        return full_report(V, W, self._tol, executor=self._executor, direct_limit=self._direct_limit)

    def indices(
        self,
        problem: PairProblem | tuple[Realization, Realization],
        *,
        validate: bool = True,
        name: str | None = None,
    ) -> IndexOutcome:
        V, W, reports = self._realizations(problem, check=validate)
        report = self._full_report(V, W)
        if name is None and isinstance(problem, PairProblem):
            name = problem.name
        model = IndexReportModel.from_report(report, name=name, validation=reports)
        return IndexOutcome(report=report, validation=reports, model=model)

    def scalar(
        self,
        problem: ScalarProblem | tuple[BlaschkeProduct, BlaschkeProduct],
        *,
        cross_check: bool = False,
        name: str | None = None,
    ) -> ScalarOutcome:
        phi, m = problem.products() if isinstance(problem, ScalarProblem) else problem
        if name is None and isinstance(problem, ScalarProblem):
            name = problem.name
        report = scalar_index_report(phi, m)
        agreement: bool | None = None
        matrix_report: IndexReport | None = None
        if cross_check:
            matrix_report = self._full_report(blaschke_realization(phi), blaschke_realization(m))
            agreement = report.same_indices(matrix_report)
            if not agreement:
                log.warning(
                    "Scalar formula and matrix pipeline disagree: %s vs %s", report.indices, matrix_report.indices
                )
        model = IndexReportModel.from_report(report, name=name)
        return ScalarOutcome(report=report, model=model, cross_check=agreement, matrix_report=matrix_report)

    def verify(
        self,
        problem: PairProblem | tuple[Realization, Realization],
        *,
        validate: bool = True,
        name: str | None = None,
        levels: int | None = None,
    ) -> VerificationOutcome:
        """
        Cross-check the main pipeline against the kernel chain, the truncated-operator
        oracle and the finite-section identities.
        """
        V, W, reports = self._realizations(problem, check=validate)
        if name is None and isinstance(problem, PairProblem):
            name = problem.name
        report = self._full_report(V, W)
        t = self._tol
        checks: list[CheckModel] = []

        k_neg = len(report.kernel_dims) - 1
        k_pos = len(report.cokernel_dims) - 1
        checks.append(
            _equality_check("kernel chain = kernel dimensions", kernel_chain_dims(V, W, k_neg, t), report.kernel_dims)
        )
        checks.append(
            _equality_check(
                "dual kernel chain = cokernel dimensions", kernel_chain_dims(W, V, k_pos, t), report.cokernel_dims
            )
        )
        checks.append(
            _equality_check("negative index count", negative_index_count(V, W, t), len(report.negative_indices))
        )

        oracle_ker = oracle_kernel_dims(V, W, k_neg + 1, t, n_max=self._oracle_n_max, executor=self._executor)
        oracle_coker = oracle_cokernel_dims(V, W, k_pos + 1, t, n_max=self._oracle_n_max, executor=self._executor)
        checks.append(_equality_check("oracle kernel dimensions", oracle_ker, report.kernel_dims + (0,)))
        checks.append(_equality_check("oracle cokernel dimensions", oracle_coker, report.cokernel_dims + (0,)))
        checks.append(
            _equality_check("oracle Fredholm index", oracle_ker[0] - oracle_coker[0], report.fredholm_index)
        )
        checks.append(
            _equality_check("index sum = dim X_v - dim X_w", report.winding_number, V.state_dim - W.state_dim)
        )

        N = levels or max(MIN_SECTION_LEVELS, 2 * (V.state_dim + W.state_dim))
        checks.extend(_residual_check(c) for c in verify_decomposition(V, W, N, t).checks)
        checks.extend(_residual_check(c, "V: ") for c in verify_realization_identities(V, N, t).checks)
        checks.extend(_residual_check(c, "W: ") for c in verify_realization_identities(W, N, t).checks)

        for c in checks:
            if not c.passed:
                log.warning("Verification check failed: %s %s", c.name, c.detail)
        model = VerificationModel(
            name=name,
            passed=all(c.passed for c in checks),
            checks=checks,
            report=IndexReportModel.from_report(report, name=name, validation=reports),
        )
        return VerificationOutcome(report=report, model=model)
