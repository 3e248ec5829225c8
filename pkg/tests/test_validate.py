import json

import pytest

from stablegmm import validate
from stablegmm.moments import Side, tail_moment_term


def test_unknown_scope():
    with pytest.raises(ValueError):
        validate.run("everything")


def test_lemma_scope_runs_only_the_scan():
    report = validate.run("lemma")
    assert [s.name for s in report.suites] == ["lemma"]
    assert report.passed and report.suites[0].checks == 27


def test_closedform_suite_on_a_reduced_grid():
    result = validate.suite_closedform(ks=(1, 6), ns=range(1, 6))
    assert result.passed and result.checks == len(validate.BATTERY) * 2 * 5 * 3


def test_closedform_suite_catches_a_sign_flip():
    def flipped(k, n, params, region, side):
        value = tail_moment_term(k, n, params, region, side)
        return -value if (side is Side.RIGHT and n == 3) else value

    result = validate.suite_closedform(thetas=validate.BATTERY[:2], ks=(1, 2), ns=range(1, 5), tail_term=flipped)
    assert not result.passed
    assert {f.n for f in result.failures} == {3}
    assert {f.k for f in result.failures} == {1, 2}
    assert all(f.detail.startswith("tail right") for f in result.failures)


def test_symmetry_suite_small():
    result = validate.suite_symmetry(probes=300, seed=5)
    assert result.passed and result.checks == 300


def test_report_serialises():
    report = validate.run("lemma")
    document = json.loads(json.dumps(report.to_dict()))
    assert document["passed"] is True
    assert document["suites"][0]["name"] == "lemma"
    assert "lemma" in report.table() and "PASS" in report.table()


def test_failed_report_lists_the_tuple():
    def broken(k, n, params, region):
        return 0.0

    result = validate.suite_closedform(thetas=validate.BATTERY[:1], ks=(1,), ns=(1,), central_term=broken)
    table = validate.Report([result]).table()
    assert "FAIL" in table and "k=1 n=1" in table
