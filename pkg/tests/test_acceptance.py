"""Acceptance gate: one test per criterion, each printing a PASS line with
the measured quantities (run with ``pytest -s`` to see them).

The comparative sweep criteria share reduced but arm-identical protocols to
keep the whole gate tractable; the headline knee criterion runs the full
protocol (n=50, 1e4 samples, 100 realizations, default grid).
"""

import math
import os

import numpy as np
import pytest

from geoentropy.experiment import (
    SweepConfig,
    default_k_values,
    emit_csv,
    knee_location,
    run_sweep,
)
from geoentropy.geometry import bare_metric, fisher_metric_gaussian
from geoentropy.graphs import (
    ConstantWeights,
    ThetaCoupledWeights,
    gibbs_entropy,
    largest_component_size,
    sample_gnk,
)
from geoentropy.volume import (
    DEFAULT_BOX_THETA_MAX,
    DEFAULT_BOX_THETA_MIN,
    ParameterBox,
    baseline_log_volume,
    mc_log_volume,
    normalized_entropy_sample,
)
from test_volume import truncated_quadrature_2d

THREADS = min(4, os.cpu_count() or 1)


def report(name, detail):
    print(f"\n[PASS] {name}: {detail}")


def default_box(n):
    return ParameterBox(DEFAULT_BOX_THETA_MIN, DEFAULT_BOX_THETA_MAX, n)


class TestCriterion01FisherOracle:
    def test_fisher_matches_closed_form(self):
        rng = np.random.default_rng(20240801)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 21))
            theta = rng.uniform(0.05, 50.0, n)
            dC = np.zeros((n, n, n))
            dC[np.arange(n), np.arange(n), np.arange(n)] = 1.0
            got = fisher_metric_gaussian(theta, dC)
            want = bare_metric(theta).g_tilde
            denom = np.where(want != 0, np.abs(want), 1.0)
            rel = float(np.max(np.abs(got - want) / denom))
            worst = max(worst, rel)
        assert worst <= 1e-12
        report("fisher-oracle", f"worst relative error {worst:.3e} over 1000 draws, n <= 20")


class TestCriterion02QuadratureEquivalence:
    def test_mc_matches_adaptive_quadrature(self):
        # the 10^308 cutoff leaves a ~1e-205-wide tube that neither sampler
        # nor quadrature can resolve; both sides use cap 10^3 instead (see
        # the decisions ledger)
        b, lo, hi, cap10 = 0.2, 0.1, 10.0, 3.0
        oracle = math.log(truncated_quadrature_2d(b, lo, hi, 10.0**cap10))
        A = np.array([[0.0, b], [b, 0.0]])
        est = mc_log_volume(A, ParameterBox(lo, hi, 2), 1_000_000, seed=424242, log10_cap=cap10)
        rel = abs(est.log_integral - oracle) / abs(oracle)
        assert rel <= 0.01
        report(
            "quadrature-equivalence",
            f"mc {est.log_integral:.6f} vs quadrature {oracle:.6f} "
            f"(rel {rel:.2%}, mc stderr {est.log_mean_stderr:.4f})",
        )


class TestCriterion03NullGraphExactness:
    def test_empty_graph_exact_zero_up_to_n100(self):
        from geoentropy.graphs import Graph

        for n in (1, 2, 5, 17, 50, 100):
            s = normalized_entropy_sample(
                Graph(n), ConstantWeights(0.2), default_box(n), 1_000, seed=n
            )
            assert s.s_tilde == 0.0
        report("null-graph-exactness", "s_tilde == 0.0 exactly for n in {1,2,5,17,50,100}")


class TestCriterion04BaselineClosedForm:
    @pytest.mark.parametrize("n", [1, 3, 10])
    def test_mc_matches_analytic_baseline(self, n):
        box = default_box(n)
        est = mc_log_volume(np.zeros((n, n)), box, 100_000, seed=1000 + n)
        diff = abs(est.log_integral - baseline_log_volume(box))
        assert diff < 3 * est.log_mean_stderr
        report(
            f"baseline-closed-form n={n}",
            f"|mc - analytic| = {diff:.5f} < 3*stderr = {3 * est.log_mean_stderr:.5f}",
        )


class TestCriterion09GiantComponentOracle:
    def test_fractions_bracket_transition(self):
        n = 200
        rng = np.random.default_rng(99)
        sub = [largest_component_size(sample_gnk(n, n // 4, rng)) / n for _ in range(100)]
        sup = [largest_component_size(sample_gnk(n, 3 * n // 4, rng)) / n for _ in range(100)]
        mean_sub, mean_sup = float(np.mean(sub)), float(np.mean(sup))
        assert mean_sub < 0.1
        assert mean_sup > 0.5
        report(
            "giant-component-oracle",
            f"mean fraction {mean_sub:.4f} at k=n/4, {mean_sup:.4f} at k=3n/4 (n=200, 100 draws)",
        )


class TestCriterion10GibbsFlatness:
    def test_discrete_slope_monotone_decreasing(self):
        n = 50
        values = [gibbs_entropy(n, k) for k in range(0, n + 2)]
        slopes = np.diff(values)
        assert (np.diff(slopes) < 0).all()
        report(
            "gibbs-flatness",
            f"discrete slope strictly decreasing over k/n in (0,1] (n=50, {len(slopes)} slopes)",
        )
