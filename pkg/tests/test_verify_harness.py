import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modrelu_approx import primitives as P
from modrelu_approx.network_core import DimensionError, linear_network
from modrelu_approx.verify_harness import (
    CSV_HEADER,
    Domain,
    SweepResult,
    SweepRow,
    check_lipschitz,
    evaluate_parallel,
    chained_product_recursion,
    lemma_f_m,
    partition_report,
    run_suite,
    sup_error,
    write_reports,
)

DOMAINS = [Domain.disk(2.0), Domain.disk(1.0, dim=2), Domain.cube(1),
           Domain.disk_real_bound(3, 1), Domain.disk_real_bound(3, 1, dim=2, box=True),
           Domain.disk_imag_bound(3, 0.5)]


class TestDomain:
    @pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: d.describe())
    def test_samples_stay_inside(self, dom):
        rng = np.random.default_rng(0)
        assert np.all(dom.contains(dom.random(2000, rng)))
        assert np.all(dom.contains(dom.grid(2000)))

    @pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: d.describe())
    def test_random_is_seeded(self, dom):
        a = dom.random(100, np.random.default_rng(7))
        b = dom.random(100, np.random.default_rng(7))
        assert np.array_equal(a, b) and a.shape == (100, dom.dim)

    def test_grid_reaches_boundary(self):
        z = Domain.disk_real_bound(3, 1).grid(10_000)[:, 0]
        assert np.isclose(np.abs(z.real).max(), 1) and np.isclose(np.abs(z).max(), 3, atol=0.1)

    @pytest.mark.parametrize("kwargs", [dict(kind="ball"), dict(kind="disk", R=0),
                                        dict(kind="disk", dim=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            Domain(**kwargs)


class TestSupError:
    def test_exact_network_has_zero_error(self):
        rep = sup_error(linear_network([[2.0]]), lambda z: 2 * z[:, 0], Domain.disk(1), 500,
                        bound=1e-15)
        assert rep.passed and rep.max_error == 0.0

    def test_reports_location_of_maximum(self):
        net = linear_network([[1.0]])
        rep = sup_error(net, lambda z: z[:, 0] * (1 - 0.1 * z[:, 0].real), Domain.cube(1), 400)
        # |0.1 z Re z| peaks at the corner z = 1 + i.
        assert rep.max_error == pytest.approx(0.1 * np.sqrt(2))
        assert rep.max_location == [[1.0, 1.0]]

    def test_failure_is_reported(self):
        rep = sup_error(P.build_re(2, 0.1), lambda z: z[:, 0].real, Domain.disk(2), 1000,
                        bound=1e-9)
        assert not rep.passed and "FAIL" in rep.line()

    def test_dimension_checked(self):
        with pytest.raises(DimensionError):
            sup_error(linear_network([[1.0, 1.0]]), lambda z: z[:, 0], Domain.disk(1), 10)

    def test_relative_scale(self):
        rep = sup_error(linear_network([[1.1]]), lambda z: z[:, 0], Domain.disk(5), 500,
                        scale=lambda z: np.abs(z[:, 0]) + 1e-300)
        assert rep.max_error == pytest.approx(0.1)

    def test_parallel_evaluation_is_thread_count_independent(self):
        net = P.build_g_re(3, 0.01)
        z = Domain.disk(3).random(999, np.random.default_rng(1))
        assert np.array_equal(evaluate_parallel(net, z, threads=1),
                              evaluate_parallel(net, z, threads=4))


class TestLemmaChecks:
    def test_lipschitz_small(self):
        rep = check_lipschitz(20_000, seed=3)
        assert rep.passed
        assert rep.details["both_inside_max_difference"] == 0.0

    @pytest.mark.parametrize("m", [0, 3, 6])
    def test_sawtooth(self, m):
        # 10240 is a multiple of 2**(m+1), so the grid holds every piece midpoint,
        # where the bound is attained.
        rep = lemma_f_m(m, 10_241)
        assert rep.passed
        assert rep.max_error == pytest.approx(2.0 ** (-2 * m - 2))

    @given(st.integers(2, 10), st.sampled_from([0.01, 0.05]), st.integers(0, 100))
    def test_chained_product_recursion(self, M, eps, seed):
        ratio, final = chained_product_recursion(M, eps, eps**2, trials=50, seed=seed)
        assert ratio <= 1 + 1e-12
        assert final.max() <= 3 * M * eps

    def test_recursion_rejects_large_eps(self):
        with pytest.raises(ValueError):
            chained_product_recursion(10, 0.2, 0.01)

    def test_partition(self):
        assert partition_report(5, points=200).passed


class TestReports:
    def test_json_lines(self, tmp_path):
        reports = run_suite("identity", samples=200)
        path = tmp_path / "r.jsonl"
        write_reports(reports, path)
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert [r["claim"] for r in rows] == [r.claim for r in reports]
        assert {"claim", "samples", "max_error", "bound", "passed", "max_location",
                "runtime_s"} <= set(rows[0])

    @pytest.mark.parametrize("suite", ["lipschitz", "identity", "partition"])
    def test_quick_suites_pass(self, suite):
        assert all(r.passed for r in run_suite(suite, samples=500))

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("everything")


class TestSweepResult:
    def test_csv_layout(self):
        rows = [SweepRow(0.3, 10, 100, 5.0, 0.01, 1.0, 2.0)]
        text = SweepResult(rows, 1, 2, "quad").to_csv()
        header, line = text.splitlines()
        assert header.split(",") == CSV_HEADER
        assert line.split(",")[:3] == ["0.3", "10", "100"]

    def test_passed_reflects_checks(self):
        res = SweepResult([], 1, 2, "quad", checks={"a": True, "b": False})
        assert not res.passed
