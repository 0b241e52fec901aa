from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import NoReturn, Sequence

import numpy as np

from wh_indices.blaschke import BlaschkeProduct, NonUnimodularError, ZeroOnOrOutsideDiscError
from wh_indices.config import Settings
from wh_indices.errors import format_fatal_error, format_validation_error
from wh_indices.markdown import render_index_report, render_scalar_report, render_verification
from wh_indices.numerics import ToleranceError, Tolerances
from wh_indices.oracle import NoStabilizationError
from wh_indices.realization import Realization, random_inner_realization
from wh_indices.schemas import PairProblem, ProblemFileError, ScalarProblem, dump_json, parse_problem
from wh_indices.service import IndexService, RealizationValidationError


log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_INCONSISTENT = 3
EXIT_NO_STABILIZATION = 4

EXAMPLES = {"gkr": "gkr_example.json"}
RANDOM_MAX_RADIUS = 0.4


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # Usage errors share the parse-error exit code instead of argparse's 2.
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def load_example(name: str) -> str:
    if name not in EXAMPLES:
        raise UsageError(f"unknown example {name!r}; available: {', '.join(sorted(EXAMPLES))}")
    return resources.files("wh_indices").joinpath("data", EXAMPLES[name]).read_text(encoding="utf-8")


def _read_problem(args: argparse.Namespace) -> PairProblem | ScalarProblem:
    if getattr(args, "example", None):
        return parse_problem(load_example(args.example), f"example:{args.example}")
    if not args.input:
        raise UsageError("an input file or --example is required")
    path = Path(args.input)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"{path}: {exc.strerror or exc}") from exc
    return parse_problem(text, str(path))


def _pair_problem(args: argparse.Namespace) -> PairProblem | tuple[Realization, Realization]:
    if getattr(args, "random_seed", None) is not None:
        rng = np.random.default_rng(args.random_seed)
        n_v, n_w = args.state_dims
        if args.io_dim < 1:
            raise UsageError("--io-dim must be at least 1")
        V = random_inner_realization(n_v, args.io_dim, rng, max_radius=RANDOM_MAX_RADIUS)
        W = random_inner_realization(n_w, args.io_dim, rng, max_radius=RANDOM_MAX_RADIUS)
        log.info(
            "Generated random pair with seed %d (state dims %d, %d; m = %d)", args.random_seed, n_v, n_w, args.io_dim
        )
        return V, W
    problem = _read_problem(args)
    if not isinstance(problem, PairProblem):
        raise ProblemFileError("expected a matrix problem with keys V and W")
    return problem


def _parse_complex(raw: str) -> complex:
    try:
        return complex(raw.strip().replace(" ", ""))
    except ValueError as exc:
        raise UsageError(f"cannot parse complex number {raw!r}") from exc


def _parse_complex_list(raw: str) -> tuple[complex, ...]:
    return tuple(_parse_complex(s) for s in raw.split(",") if s.strip())


def _parse_state_dims(raw: str) -> tuple[int, int]:
    parts = [p.strip() for p in raw.split(",")]
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("state dims must be two integers, e.g. 3,2") from exc
    if len(dims) != 2 or min(dims) < 0:
        raise argparse.ArgumentTypeError("state dims must be two nonnegative integers, e.g. 3,2")
    return dims[0], dims[1]


def _scalar_problem(args: argparse.Namespace) -> ScalarProblem | tuple[BlaschkeProduct, BlaschkeProduct]:
    if args.input:
        problem = _read_problem(args)
        if not isinstance(problem, ScalarProblem):
            raise ProblemFileError("expected a scalar problem with keys phi and m")
        return problem
    phi = BlaschkeProduct(zeta=_parse_complex(args.phi_zeta), zeros=_parse_complex_list(args.phi_zeros))
    m = BlaschkeProduct(zeta=_parse_complex(args.m_zeta), zeros=_parse_complex_list(args.m_zeros))
    return phi, m


def _tolerances(args: argparse.Namespace, settings: Settings) -> Tolerances:
    return Tolerances(
        rank_rel=args.tol_rank if args.tol_rank is not None else settings.tol_rank,
        eig_one=args.tol_eig if args.tol_eig is not None else settings.tol_eig,
        residual=args.tol_residual if args.tol_residual is not None else settings.tol_residual,
    )


def _write_json(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
        log.info("Wrote JSON report to %s", path)


def cmd_indices(args: argparse.Namespace, service: IndexService) -> int:
    outcome = service.indices(_pair_problem(args), validate=not args.no_validate)
    sys.stdout.write(render_index_report(outcome.model))
    _write_json(args.json_out, dump_json(outcome.model))
    return EXIT_OK


def cmd_scalar(args: argparse.Namespace, service: IndexService) -> int:
    outcome = service.scalar(_scalar_problem(args), cross_check=args.cross_check)
    sys.stdout.write(render_scalar_report(outcome.model, cross_check=outcome.cross_check))
    _write_json(args.json_out, dump_json(outcome.model))
    return EXIT_OK if outcome.cross_check in (None, True) else EXIT_INCONSISTENT


def cmd_verify(args: argparse.Namespace, service: IndexService) -> int:
    outcome = service.verify(_pair_problem(args), validate=not args.no_validate)
    sys.stdout.write(render_verification(outcome.model))
    _write_json(args.json_out, dump_json(outcome.model))
    return EXIT_OK if outcome.passed else EXIT_INCONSISTENT


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-rank", type=float, default=None, help="Relative singular-value cutoff (default 1e-9)")
    p.add_argument("--tol-eig", type=float, default=None, help="Distance-to-1 eigenvalue cutoff (default 1e-8)")
    p.add_argument("--tol-residual", type=float, default=None, help="Contract-check cutoff (default 1e-8)")
    p.add_argument("--oracle-n-max", type=int, default=None, help="Largest finite section tried by the oracle")
    p.add_argument("--json-out", default=None, help="Also write the report as JSON to this path")
    p.add_argument("--log-level", default=None, help="Logging level (default from WH_LOG_LEVEL, else WARNING)")


def _add_pair_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="Problem file with realizations V and W")
    p.add_argument("--example", choices=sorted(EXAMPLES), help="Use a built-in example instead of a file")
    p.add_argument("--no-validate", action="store_true", help="Run even if a realization fails validation")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wh-indices", description="Wiener-Hopf indices of R = VW* from stable unitary realizations")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("indices", help="Compute the index report of a pair (V, W)")
    _add_pair_input(s)
    _add_common(s)
    s.set_defaults(func=cmd_indices)

    s = sub.add_parser("scalar", help="Index data of R = φ·conj(m) for Blaschke products φ and m")
    s.add_argument("input", nargs="?", help="Problem file with Blaschke products phi and m")
    s.add_argument("--phi-zeros", default="", help="Comma-separated zeros of φ, e.g. 0,0 or 0.5,0.1+0.2j")
    s.add_argument("--m-zeros", default="", help="Comma-separated zeros of m")
    s.add_argument("--phi-zeta", default="1", help="Unimodular constant of φ (default 1)")
    s.add_argument("--m-zeta", default="1", help="Unimodular constant of m (default 1)")
    s.add_argument("--cross-check", action="store_true", help="Also run the matrix pipeline on realizations of φ, m")
    _add_common(s)
    s.set_defaults(func=cmd_scalar)

    s = sub.add_parser("verify", help="Cross-check the pipeline against the kernel chain and the section oracle")
    _add_pair_input(s)
    s.add_argument("--random-seed", type=int, default=None, help="Verify a random pair generated from this seed")
    s.add_argument("--state-dims", type=_parse_state_dims, default=(3, 2), help="State dimensions n_v,n_w (random)")
    s.add_argument("--io-dim", type=int, default=2, help="I/O dimension m (random)")
    _add_common(s)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
    except ValueError as exc:
        sys.stderr.write(format_validation_error(str(exc), hint="Fix the WH_* environment variables and retry."))
        return EXIT_PARSE
    level = (args.log_level or settings.log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    try:
        tolerances = _tolerances(args, settings)
        service = IndexService(settings=settings, tolerances=tolerances, oracle_n_max=args.oracle_n_max)
        return args.func(args, service)
    except (ProblemFileError, UsageError, ToleranceError, NonUnimodularError) as exc:
        sys.stderr.write(format_validation_error(str(exc), hint="Fix the problem file or flags and retry."))
        return EXIT_PARSE
    except (RealizationValidationError, ZeroOnOrOutsideDiscError) as exc:
        hint = "Pass a stable unitary realization or use --no-validate."
        sys.stderr.write(format_validation_error(str(exc), hint=hint))
        return EXIT_VALIDATION
    except NoStabilizationError as exc:
        sys.stderr.write(format_fatal_error(str(exc), hint="Raise --oracle-n-max or check the realizations."))
        return EXIT_NO_STABILIZATION
    except Exception as exc:
        msg = str(exc).strip() or exc.__class__.__name__
        sys.stderr.write(format_fatal_error(f"{exc.__class__.__name__}: {msg}"))
        return EXIT_INCONSISTENT
