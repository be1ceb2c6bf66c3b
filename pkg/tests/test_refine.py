import numpy as np
import pytest

from hmmseg.inference import forward_backward, log_likelihood, pmap, viterbi
from hmmseg.model import CategoricalEmission, ModelSpec, sample
from hmmseg.refine import (
    RefinementConfig,
    bunch_refine,
    compute_metrics,
    iterative_refine,
    trace_rows,
)

import oracles


class TestConfig:
    def test_delta_bounds(self):
        with pytest.raises(ValueError):
            RefinementConfig(delta=0.0, max_iterations=5)
        with pytest.raises(ValueError):
            RefinementConfig(delta=1.2, max_iterations=5)
        with pytest.raises(ValueError):
            RefinementConfig(delta=0.1, max_iterations=0)

    def test_peep_requires_truth(self):
        with pytest.raises(ValueError, match="true_path"):
            RefinementConfig(delta=0.1, max_iterations=5, mode="peep")

    def test_delta_cap_at_run_time(self):
        rng = np.random.default_rng(0)
        spec, obs = oracles.random_instance(rng, k=3, n=6)
        config = RefinementConfig(delta=0.4, max_iterations=3)  # 0.4 >= 1/3
        with pytest.raises(ValueError, match="1/K"):
            iterative_refine(spec, obs, config)
        config = RefinementConfig(delta=0.4, max_iterations=3, allow_large_delta=True)
        iterative_refine(spec, obs, config)


class TestIterative:
    def test_quits_immediately_when_threshold_met(self):
        rng = np.random.default_rng(1)
        spec, obs = oracles.random_instance(rng, k=2, n=6)
        config = RefinementConfig(delta=1e-12, max_iterations=10)
        path, trace = iterative_refine(spec, obs, config)
        assert trace.iterations == 0
        assert trace.stopped_by_threshold
        assert np.array_equal(path, viterbi(spec, obs))

    def test_pinned_times_stay_at_probability_one(self):
        rng = np.random.default_rng(2)
        spec, obs = oracles.random_instance(rng, k=3, n=8)
        config = RefinementConfig(
            delta=0.2, max_iterations=5, stop_at_threshold=False
        )
        _, trace = iterative_refine(spec, obs, config)
        pinned = set()
        for rec in trace.records[1:]:
            assert rec.time not in pinned
            pinned.add(rec.time)
            for t in pinned:
                assert rec.rho[t] == pytest.approx(1.0, abs=1e-9)

    def test_two_iterations_match_restricted_argmax_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            spec, obs = oracles.random_instance(rng, k=3, n=8)
            config = RefinementConfig(
                delta=0.01, max_iterations=2, stop_at_threshold=False
            )
            path, trace = iterative_refine(spec, obs, config)
            if trace.iterations < 2:
                continue
            pins = list(trace.pins)
            ref = oracles.brute_viterbi(*oracles.log_inputs(spec, obs), pins)
            assert np.array_equal(path, ref)

    def test_output_admissible_and_posterior_monotone(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            spec, obs = oracles.random_instance(rng, k=3, n=8, with_zeros=True)
            truth = viterbi(spec, obs)
            for mode in ("pmap", "peep"):
                config = RefinementConfig(
                    delta=0.25, max_iterations=6, mode=mode, true_path=truth
                )
                path, trace = iterative_refine(spec, obs, config)
                lps = [rec.metrics.log_posterior for rec in trace.records]
                assert all(lp > -np.inf for lp in lps)
                assert all(b <= a + 1e-9 for a, b in zip(lps, lps[1:]))
                times = [rec.time for rec in trace.records[1:]]
                assert len(times) == len(set(times))
                # pins jointly feasible given the observations
                assert log_likelihood(spec, obs, trace.pins) > -np.inf

    def test_threshold_exit_condition(self):
        rng = np.random.default_rng(5)
        spec, obs = oracles.random_instance(rng, k=2, n=10)
        config = RefinementConfig(delta=0.3, max_iterations=10, allow_large_delta=True)
        _, trace = iterative_refine(spec, obs, config)
        if trace.stopped_by_threshold:
            assert trace.records[-1].rho.min() >= 0.3

    def test_peep_mode_pins_true_states(self):
        spec = ModelSpec(
            [[0.7, 0.3], [0.3, 0.7]],
            [0.5, 0.5],
            CategoricalEmission([[0.6, 0.4], [0.4, 0.6]], ("u", "v")),
        )
        truth, obs = sample(spec, 12, seed=7)
        config = RefinementConfig(
            delta=0.45, max_iterations=4, mode="peep", true_path=truth,
            allow_large_delta=True,
        )
        _, trace = iterative_refine(spec, obs, config)
        for rec in trace.records[1:]:
            assert rec.state == truth[rec.time]


class TestBunch:
    def test_count_zero_returns_viterbi(self):
        rng = np.random.default_rng(6)
        spec, obs = oracles.random_instance(rng, k=3, n=7)
        result = bunch_refine(spec, obs, count=0)
        assert np.array_equal(result.path, viterbi(spec, obs))
        assert result.admissible and len(result.pins) == 0

    def test_count_selection_matches_restricted_argmax(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            spec, obs = oracles.random_instance(rng, k=3, n=8)
            result = bunch_refine(spec, obs, count=2)
            if not result.admissible:
                continue
            ref = oracles.brute_viterbi(
                *oracles.log_inputs(spec, obs), list(result.pins)
            )
            assert np.array_equal(result.path, ref)

    def test_count_selection_takes_lowest_rho_ties_by_time(self):
        rng = np.random.default_rng(8)
        spec, obs = oracles.random_instance(rng, k=3, n=8)
        tables = forward_backward(spec, obs)
        v = viterbi(spec, obs)
        rho = tables.smoothing[np.arange(len(obs)), v]
        result = bunch_refine(spec, obs, count=3)
        chosen = sorted(result.pins.times)
        expected = sorted(np.lexsort((np.arange(len(obs)), rho))[:3].tolist())
        assert chosen == expected

    def test_threshold_selection(self):
        rng = np.random.default_rng(9)
        spec, obs = oracles.random_instance(rng, k=3, n=8)
        tables = forward_backward(spec, obs)
        v = viterbi(spec, obs)
        rho = tables.smoothing[np.arange(len(obs)), v]
        delta = float(np.median(rho))
        result = bunch_refine(spec, obs, delta=delta)
        assert sorted(result.pins.times) == np.nonzero(rho <= delta)[0].tolist()

    def test_peep_mode_always_admissible(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            spec, obs_and = oracles.random_instance(rng, k=3, n=8, with_zeros=True)
            spec2, obs = oracles.random_instance(rng, k=3, n=8, with_zeros=True)
            truth = viterbi(spec2, obs)
            result = bunch_refine(spec2, obs, count=4, mode="peep", true_path=truth)
            assert result.admissible
            assert result.metrics.log_posterior > -np.inf

    def test_inadmissible_pmap_bunch_reports_sentinel(self):
        # posterior modes are state 0 at t=0 and state 2 at t=1, but the
        # transition 0 -> 2 is forbidden, so pinning both is inadmissible
        spec = ModelSpec(
            [[0.5, 0.5, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]],
            [0.5, 0.25, 0.25],
            CategoricalEmission([[1.0], [1.0], [1.0]], ("u",)),
        )
        obs = ["u", "u"]
        result = bunch_refine(spec, obs, count=2, mode="pmap")
        assert not result.admissible
        assert result.metrics.log_posterior == -np.inf
        assert result.metrics.expected_errors is None
        assert result.metrics.rho_min_cond is None
        assert result.metrics.rho_min_uncond is not None
        # overlay path: pinned states everywhere they were chosen
        for t, w in result.pins:
            assert result.path[t] == w

    def test_selection_args_validated(self):
        rng = np.random.default_rng(11)
        spec, obs = oracles.random_instance(rng, k=2, n=5)
        with pytest.raises(ValueError, match="exactly one"):
            bunch_refine(spec, obs)
        with pytest.raises(ValueError, match="exactly one"):
            bunch_refine(spec, obs, delta=0.1, count=2)
        with pytest.raises(ValueError, match="true_path"):
            bunch_refine(spec, obs, count=1, mode="peep")


class TestComputeMetrics:
    def test_true_path_has_zero_errors(self):
        rng = np.random.default_rng(12)
        spec, obs = oracles.random_instance(rng, k=2, n=6)
        path = viterbi(spec, obs)
        m = compute_metrics(spec, obs, path, true_path=path)
        assert m.errors == 0

    def test_pmap_minimizes_expected_errors_over_enumeration(self):
        rng = np.random.default_rng(13)
        spec, obs = oracles.random_instance(rng, k=2, n=6)
        g = pmap(spec, obs)
        best = compute_metrics(spec, obs, g).expected_errors
        paths, _ = oracles.enumerate_paths(*oracles.log_inputs(spec, obs))
        for p in paths:
            assert best <= compute_metrics(spec, obs, p).expected_errors + 1e-9

    def test_viterbi_expected_errors_definitional(self):
        rng = np.random.default_rng(14)
        spec, obs = oracles.random_instance(rng, k=2, n=8)
        v = viterbi(spec, obs)
        tables = forward_backward(spec, obs)
        m = compute_metrics(spec, obs, v)
        rho = tables.smoothing[np.arange(len(obs)), v]
        assert m.expected_errors == pytest.approx(len(obs) - rho.sum(), abs=1e-9)
        assert m.rho_min_cond == m.rho_min_uncond

    def test_conditional_fields_with_pins(self):
        rng = np.random.default_rng(15)
        spec, obs = oracles.random_instance(rng, k=3, n=7)
        v = viterbi(spec, obs)
        pins = [(2, int(v[2]))]
        m = compute_metrics(spec, obs, v, pins=pins)
        cond = forward_backward(spec, obs, pins)
        rho_c = cond.smoothing[np.arange(len(obs)), v]
        assert m.rho_min_cond == pytest.approx(rho_c.min(), abs=1e-12)
        assert m.expected_errors == pytest.approx(len(obs) - rho_c.sum(), abs=1e-9)

    def test_trace_rows_shape(self):
        rng = np.random.default_rng(16)
        spec, obs = oracles.random_instance(rng, k=2, n=8)
        config = RefinementConfig(delta=0.2, max_iterations=3, stop_at_threshold=False)
        _, trace = iterative_refine(spec, obs, config)
        rows = trace_rows(trace)
        assert rows[0]["m"] == 0 and rows[0]["t_m"] is None
        assert all(set(r) == {
            "m", "t_m", "w_m", "errors", "expected_errors",
            "rho_min_cond", "rho_min_uncond", "log_posterior",
        } for r in rows)
