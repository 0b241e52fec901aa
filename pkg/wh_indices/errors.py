from __future__ import annotations


def format_validation_error(message: str, *, hint: str = "Fix the input file or flags and retry.") -> str:
    return (
        "## Summary\n"
        f"Validation error: {message}\n\n"
        "## Key Findings\n"
        "- **High**: Input validation failed.\n\n"
        "## Recommendations\n"
        f"- {hint}\n"
    )


def format_fatal_error(message: str, *, hint: str | None = None) -> str:
    recommendations = (
        f"- {hint}\n"
        if hint
        else "- Re-run with --log-level DEBUG to see per-step diagnostics.\n"
        "- Loosen --tol-eig / --tol-rank if eigenvalues sit close to the cutoff.\n"
    )
    return (
        "## Summary\n"
        "An error occurred while computing the index report.\n\n"
        "## Key Findings\n"
        f"- **High**: {message}\n\n"
        "## Recommendations\n"
        f"{recommendations}"
    )
