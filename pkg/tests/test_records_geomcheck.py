import json

import numpy as np
import pytest

from qpseudo import Signature
from qpseudo.geomcheck import SUITE, CheckResult, check_coverage, hyperbolic_slice_points, run_suite
from qpseudo.records import clean, read_embeddings, read_history, write_embeddings, write_history, write_json


def test_json_is_canonical(tmp_path):
    write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": [np.int64(2), float("nan")]})
    text = (tmp_path / "a.json").read_text()
    assert json.loads(text) == {"a": [2, None], "b": 1.5}
    assert text.index('"a"') < text.index('"b"') and text.endswith("\n")


def test_clean_handles_arrays():
    assert clean({"x": np.array([1.0, np.inf])}) == {"x": [1.0, None]}


def test_history_roundtrip(tmp_path):
    rows = [{"epoch": 0, "loss": 2.5, "mAP": 0.1}, {"epoch": 1, "loss": None, "mAP": 1 / 3}]
    write_history(tmp_path / "h.csv", rows)
    assert read_history(tmp_path / "h.csv") == rows


def test_embeddings_roundtrip_exact(tmp_path, rng):
    X = rng.standard_normal((7, 4)) * 1e3
    write_embeddings(tmp_path / "e.csv", X)
    np.testing.assert_array_equal(read_embeddings(tmp_path / "e.csv"), X)


def test_embeddings_header_required(tmp_path):
    (tmp_path / "e.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_embeddings(tmp_path / "e.csv")


@pytest.mark.parametrize("check", SUITE, ids=lambda f: f.__name__)
def test_each_check_passes_on_small_sample(check, rng):
    res = check(Signature(2, 2, -0.5), 500, rng)
    assert isinstance(res, CheckResult) and res.passed, res


def test_check_result_failure_flag():
    assert not CheckResult("x", "Q", 1e-3, 1e-8, 10).passed


def test_coverage_counts_violations(rng):
    assert check_coverage(Signature(1, 1, -1.0), 2000, rng).max_error == 0.0


def test_hyperbolic_slice_needs_one_time_dim(rng):
    with pytest.raises(ValueError):
        hyperbolic_slice_points(Signature(2, 2, -1.0), 3, rng)


def test_run_suite_report_shape():
    rep = run_suite([(1, 1)], [-1.0], n_samples=200, n_coverage=500)
    assert rep["passed"] and len(rep["checks"]) == len(SUITE) + 1
    assert {"name", "signature", "max_error", "tolerance", "n", "passed"} <= set(rep["checks"][0])
