from __future__ import annotations

from wh_indices.schemas import DiagnosticsModel, IndexReportModel, ValidationModel, VerificationModel


def _ints(values: list[int]) -> str:
    return ", ".join(str(v) for v in values) if values else "none"


def _num(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3e}"


def _title(name: str | None, default: str) -> str:
    return f"# {name}\n\n" if name else f"# {default}\n\n"


def _operator_status(report: IndexReportModel) -> str:
    if report.n_tr == 0 and report.d_tr == 0:
        return "T_R is invertible."
    if report.d_tr == 0:
        return "T_R is onto with a nontrivial kernel."
    if report.n_tr == 0:
        return "T_R is one to one with closed range of positive codimension."
    return "T_R has both a kernel and a cokernel."


def _summary(report: IndexReportModel) -> str:
    return (
        "## Summary\n"
        f"Partial indices: {{{_ints(report.indices)}}}\n"
        f"- dim ker T_R: {report.n_tr}\n"
        f"- codim ran T_R: {report.d_tr}\n"
        f"- Fredholm index: {report.fredholm_index}\n"
        f"- Winding number: {report.winding_number}\n"
        f"- {_operator_status(report)}\n"
    )


def _diagnostics(d: DiagnosticsModel) -> str:
    lines = ["## Diagnostics"]
    if d.stein_residual is not None:
        lines.append(f"- Stein residual: {_num(d.stein_residual)} (condition {_num(d.stein_condition)})")
    if d.q_residual is not None:
        lines.append(f"- ||Q - (I - Ω*Ω)||: {_num(d.q_residual)}")
    if d.q_star_residual is not None:
        lines.append(f"- ||Q★ - (I - ΩΩ*)||: {_num(d.q_star_residual)}")
    if d.omega_star_mismatch is not None:
        lines.append(f"- ||Ω★ - Ω*||: {_num(d.omega_star_mismatch)}")
    if d.kernel_omega is not None:
        lines.append(f"- dim ker Ω / dim ker Ω*: {d.kernel_omega} / {d.kernel_omega_adjoint}")
    if d.rank_y is not None:
        lines.append(f"- rank Y: {d.rank_y}")
    if d.state_dim_difference is not None:
        lines.append(f"- dim X_v - dim X_w: {d.state_dim_difference}")
    for label, gaps in (("kernel", d.kernel_gaps), ("cokernel", d.cokernel_gaps)):
        if gaps:
            lines.append(f"- Largest eigenvalues below the unit cutoff ({label}): {', '.join(_num(g) for g in gaps)}")
    if d.warnings:
        lines.extend(f"- **Warning**: {w}" for w in d.warnings)
    else:
        lines.append("- No warnings.")
    return "\n".join(lines) + "\n"


def _validation(validation: dict[str, ValidationModel]) -> str:
    if not validation:
        return ""
    lines = ["## Validation"]
    for label, v in validation.items():
        status = "pass" if v.passed else "FAIL"
        lines.append(
            f"- {label}: {status} (||T*T - I|| {_num(v.isometry_residual)}, ||TT* - I|| {_num(v.coisometry_residual)}, "
            f"spectral radius {_num(v.spectral_radius)})"
        )
    return "\n".join(lines) + "\n\n"


def _index_sections(report: IndexReportModel) -> str:
    return (
        "## Indices\n"
        f"- Negative: {_ints(report.negative_indices)}\n"
        f"- Zero: {report.zero_count}\n"
        f"- Positive: {_ints(report.positive_indices)}\n\n"
        "## Kernel Dimensions\n"
        f"- dim ker T_(z^k R): {_ints(report.kernel_dims)}\n"
        f"- μ: {_ints(report.mu)}\n"
        f"- codim ran T_(z^-k R): {_ints(report.cokernel_dims)}\n"
        f"- ν: {_ints(report.nu)}\n\n"
        + _validation(report.validation)
        + _diagnostics(report.diagnostics)
    )


def render_index_report(report: IndexReportModel) -> str:
    out = _title(report.name, "Wiener-Hopf indices") + _summary(report) + "\n" + _index_sections(report)
    return out.strip() + "\n"


def render_scalar_report(report: IndexReportModel, *, cross_check: bool | None = None) -> str:
    lines = [
        _title(report.name, "Scalar index").rstrip("\n"),
        "",
        _summary(report).rstrip("\n"),
        "",
        "## Kernel Dimensions",
        f"- dim ker T_R: {report.n_tr}",
        f"- dim coker T_R: {report.d_tr}",
        f"- rank Y: {report.diagnostics.rank_y}",
    ]
    if cross_check is not None:
        lines.extend(["", "## Checks", f"- Matrix pipeline agreement: {'pass' if cross_check else 'FAIL'}"])
    return "\n".join(lines).strip() + "\n"


def render_verification(model: VerificationModel) -> str:
    lines = [_title(model.name, "Verification").rstrip("\n"), "", "## Summary"]
    failed = [c for c in model.checks if not c.passed]
    if failed:
        lines.append(f"{len(failed)} of {len(model.checks)} checks failed.")
    else:
        lines.append(f"All {len(model.checks)} checks passed.")
    lines.extend(["", "## Checks"])
    for c in model.checks:
        status = "pass" if c.passed else "FAIL"
        extra = ""
        if c.residual is not None:
            extra = f" (residual {_num(c.residual)}, threshold {_num(c.threshold)})"
        detail = f": {c.detail}" if c.detail else ""
        lines.append(f"- **{status}** {c.name}{detail}{extra}")
    out = "\n".join(lines) + "\n"
    if model.report is not None:
        out += f"\nPartial indices: {{{_ints(model.report.indices)}}}\n\n" + _index_sections(model.report)
    return out.strip() + "\n"
