import json
import unittest

import numpy as np

from wh_indices.blaschke import BlaschkeProduct
from wh_indices.cli import load_example
from wh_indices.realization import ValidationReport, constant_realization, monomial_realization, validate
from wh_indices.schemas import (
    BlaschkeModel,
    IndexReportModel,
    PairProblem,
    ProblemFileError,
    ScalarProblem,
    ValidationModel,
    VerificationModel,
    dump_json,
    parse_problem,
)
from wh_indices.whindex import full_report


def _pair_json(**overrides: object) -> str:
    one = [[[1.0, 0.0]]]
    data: dict[str, object] = {"V": {"D": one}, "W": {"D": one}}
    data.update(overrides)
    return json.dumps(data)


class TestParseProblem(unittest.TestCase):
    def test_builtin_example(self) -> None:
        problem = parse_problem(load_example("gkr"), "example:gkr")
        self.assertIsInstance(problem, PairProblem)
        V, W = problem.realizations()
        self.assertEqual((V.state_dim, W.state_dim, V.io_dim), (8, 6, 5))
        self.assertTrue(validate(V).passed)
        self.assertTrue(validate(W).passed)

    def test_constant_pair_with_empty_matrices(self) -> None:
        problem = parse_problem(_pair_json())
        V, W = problem.realizations()
        self.assertEqual(V.state_dim, 0)
        self.assertEqual(V.B.shape, (0, 1))

    def test_scalar_problem(self) -> None:
        problem = parse_problem('{"phi": {"zeros": [[0, 0], [0, 0]]}, "m": {"zeta": [-1, 0], "zeros": [[0.5, 0]]}}')
        self.assertIsInstance(problem, ScalarProblem)
        phi, m = problem.products()
        self.assertEqual(phi.degree, 2)
        self.assertEqual(m.zeta, -1.0)
        self.assertEqual(m.zeros, (0.5 + 0j,))

    def test_json_syntax_error_has_position(self) -> None:
        with self.assertRaises(ProblemFileError) as ctx:
            parse_problem('{"V": [1, 2,\n]}', "p.json")
        self.assertIn("p.json:2:1", str(ctx.exception))

    def test_unknown_shape(self) -> None:
        with self.assertRaises(ProblemFileError):
            parse_problem('{"X": 1}')
        with self.assertRaises(ProblemFileError):
            parse_problem("[1, 2]")

    def test_schema_error_names_the_field(self) -> None:
        with self.assertRaises(ProblemFileError) as ctx:
            parse_problem(_pair_json(W={"D": [[[1.0, 0.0, 3.0]]]}), "p.json")
        self.assertIn("W.D[0][0]", str(ctx.exception))
        with self.assertRaises(ProblemFileError) as ctx:
            parse_problem(_pair_json(V={"D": [[[1.0, 0.0]]], "E": []}))
        self.assertIn("V.E", str(ctx.exception))

    def test_ragged_rows(self) -> None:
        problem = parse_problem(_pair_json(V={"A": [[[0, 0]], [[0, 0], [0, 0]]], "D": [[[1, 0]]]}))
        with self.assertRaises(ProblemFileError) as ctx:
            problem.realizations()
        self.assertIn("V.A[1]", str(ctx.exception))

    def test_dimension_mismatch(self) -> None:
        problem = parse_problem(_pair_json(V={"A": [[[0, 0]]], "B": [[[1, 0], [0, 0]]], "D": [[[1, 0]]]}))
        with self.assertRaises(ProblemFileError) as ctx:
            problem.realizations()
        self.assertIn("V:", str(ctx.exception))

    def test_realizations_survive_a_round_trip(self) -> None:
        V, W = monomial_realization(3), monomial_realization(1)
        problem = parse_problem(PairProblem.from_realizations(V, W, name="z^3 / z").model_dump_json())
        V2, W2 = problem.realizations()
        self.assertTrue(V.allclose(V2))
        self.assertTrue(W.allclose(W2))
        self.assertEqual(problem.name, "z^3 / z")

    def test_blaschke_model(self) -> None:
        b = BlaschkeProduct(zeta=1j, zeros=(0.25 - 0.5j,))
        self.assertEqual(BlaschkeModel.from_blaschke(b).to_blaschke(), b)


class TestReportJson(unittest.TestCase):
    def test_report_json_is_stable(self) -> None:
        V, W = parse_problem(load_example("gkr")).realizations()
        model = IndexReportModel.from_report(full_report(V, W), name="gkr", validation={"V": validate(V)})
        text = dump_json(model)
        self.assertEqual(dump_json(IndexReportModel.model_validate_json(text)), text)
        data = json.loads(text)
        self.assertEqual(data["indices"], [-4, -2, 0, 3, 5])
        self.assertEqual(data["kernel_dims"], [6, 4, 2, 1, 0])
        self.assertTrue(data["validation"]["V"]["passed"])

    def test_unbounded_values_serialize_as_null(self) -> None:
        report = ValidationReport(
            isometry_residual=float("inf"),
            coisometry_residual=0.0,
            spectral_radius=float("nan"),
            passed=False,
            margin_warning=False,
        )
        model = ValidationModel.from_report(report)
        self.assertIsNone(model.isometry_residual)
        self.assertIsNone(model.spectral_radius)
        text = dump_json(model)
        self.assertNotIn("Infinity", text)
        self.assertNotIn("NaN", text)
        self.assertEqual(dump_json(ValidationModel.model_validate_json(text)), text)

    def test_constant_pair_report(self) -> None:
        V = constant_realization(np.eye(1))
        model = IndexReportModel.from_report(full_report(V, V))
        verification = VerificationModel(passed=True, checks=[], report=model)
        text = dump_json(verification)
        self.assertEqual(dump_json(VerificationModel.model_validate_json(text)), text)
        self.assertEqual(model.indices, [0])


if __name__ == "__main__":
    unittest.main()
