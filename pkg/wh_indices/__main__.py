import sys


def main() -> int:
    """
    Entrypoint for the wh-indices command.

    Notes:
    - Reports go to stdout; logs and error reports go to stderr.
    - The exit code distinguishes parse, validation, inconsistency and oracle failures.
    """
    try:
        from wh_indices.cli import main as cli_main
    except Exception as exc:  # pragma: no cover
        raise SystemExit(
            "Failed to import wh_indices. Install dependencies first (see pyproject.toml).\n"
            f"Import error: {type(exc).__name__}: {exc}"
        ) from exc

    return cli_main()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
