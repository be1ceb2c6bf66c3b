import numpy as np
import pytest

from hmmseg.bounds import (
    ClusterSpec,
    check_cluster,
    empirical_tail,
    position_bounds,
    sigma,
    stopping_times,
    verify_bounds,
    viterbi_bounds,
)
from hmmseg.experiments import small_probability_model
from hmmseg.model import (
    CategoricalEmission,
    GaussianEmission,
    ModelSpec,
    TableEmission,
    sample,
    stationary_distribution,
)

import oracles


def two_state_spec(eps1, eps2, p1=0.8, p2=0.3, initial=(0.5, 0.5)):
    return ModelSpec(
        [[1 - eps1, eps1], [eps2, 1 - eps2]],
        initial,
        CategoricalEmission([[p1, 1 - p1], [p2, 1 - p2]], ("u", "v")),
    )


class TestSigma:
    def test_two_state_closed_form(self):
        eps1, eps2 = 0.2, 0.4
        sp = sigma(np.array([[1 - eps1, eps1], [eps2, 1 - eps2]]))
        assert sp.sigma1 == pytest.approx(eps1 / (1 - eps1), abs=1e-15)
        assert sp.sigma2 == pytest.approx(eps1 / (1 - eps2), abs=1e-15)

    def test_uniform_rows_give_one(self):
        sp = sigma(np.full((3, 3), 1 / 3))
        assert sp.sigma1 == 1.0 and sp.sigma2 == 1.0

    def test_zero_entry_gives_zero(self):
        sp = sigma(np.array([[0.5, 0.5, 0.0], [0.2, 0.4, 0.4], [0.3, 0.3, 0.4]]))
        assert sp.sigma1 == 0.0


class TestViterbiBounds:
    def test_iid_chain_gives_half(self):
        spec = two_state_spec(0.5, 0.5)
        report = viterbi_bounds(spec, stationary=True)
        assert report.interior_bound == pytest.approx(0.5)
        assert report.first_bound == pytest.approx(0.5)
        assert report.last_bound == pytest.approx(0.5)
        assert report.stationary_bounds == pytest.approx((0.5, 0.5, 0.5))

    def test_symmetric_eps_chain_interior(self):
        eps = 0.2
        report = viterbi_bounds(two_state_spec(eps, eps))
        expected = eps**4 / (eps**4 + (1 - eps) ** 4)
        assert report.interior_bound == pytest.approx(expected, abs=1e-15)

    def test_asymmetric_endpoint_bounds(self):
        eps1, eps2 = 0.2, 0.4
        report = viterbi_bounds(two_state_spec(eps1, eps2))
        assert report.first_bound == pytest.approx(
            eps1**2 / (eps1**2 + (1 - eps1) ** 2)
        )
        assert report.last_bound == pytest.approx(
            eps1**2 / (eps1**2 + (1 - eps2) ** 2)
        )
        assert report.interior_bound == pytest.approx(
            eps1**4 / (eps1**4 + (1 - eps1) ** 2 * (1 - eps2) ** 2)
        )

    def test_zero_transition_gives_zero_interior(self):
        spec = ModelSpec(
            [[0.5, 0.5, 0.0], [0.2, 0.4, 0.4], [0.3, 0.3, 0.4]],
            [1 / 3, 1 / 3, 1 / 3],
            TableEmission(np.ones((3, 1)), ("z",)),
        )
        assert viterbi_bounds(spec).interior_bound == 0.0

    def test_deterministic_start_first_bound_is_one(self):
        spec = two_state_spec(0.3, 0.3, initial=(1.0, 0.0))
        report = viterbi_bounds(spec)
        assert report.k1 == 1
        assert report.first_bound == 1.0

    def test_stationary_variant_dominates_plain(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            spec = oracles.random_model(rng, k=3, stationary_start=True)
            plain = viterbi_bounds(spec)
            both = viterbi_bounds(spec, stationary=True)
            si, sf, sl = both.stationary_bounds
            assert si >= plain.interior_bound - 1e-15
            assert sl >= plain.last_bound - 1e-15

    def test_reversible_chain_equality(self):
        spec = two_state_spec(0.2, 0.4)
        spec = ModelSpec(spec.transition, stationary_distribution(spec), spec.emission)
        report = viterbi_bounds(spec, stationary=True)
        assert report.stationary_bounds[0] == pytest.approx(report.interior_bound)

    def test_doubly_stochastic_interior_equality(self):
        P = np.array([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2], [0.3, 0.2, 0.5]])
        spec = ModelSpec(P, np.ones(3) / 3, TableEmission(np.ones((3, 1)), ("z",)))
        report = viterbi_bounds(spec, stationary=True)
        assert report.stationary_bounds[0] == pytest.approx(report.interior_bound)

    def test_stationary_variant_on_reducible_chain_raises(self):
        spec = ModelSpec(
            [[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5], TableEmission(np.ones((2, 1)), ("z",))
        )
        with pytest.raises(ValueError):
            viterbi_bounds(spec, stationary=True)


class TestVerifyBounds:
    def test_no_violations_on_random_positive_models(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            k = int(rng.integers(2, 5))
            spec = oracles.random_model(rng, k=k, stationary_start=bool(rng.integers(2)))
            _, obs = sample(spec, 50, rng)
            check = verify_bounds(spec, obs)
            assert check.violations == 0
            assert check.worst_margin >= 0

    def test_iid_chain_rho_matches_pointwise_bayes(self):
        spec = two_state_spec(0.5, 0.5)
        _, obs = sample(spec, 40, seed=2)
        check = verify_bounds(spec, obs)
        f = spec.emission.probs
        best = np.maximum(f[0, obs], f[1, obs])
        expected = best / (f[0, obs] + f[1, obs])
        np.testing.assert_allclose(check.rho, expected, atol=1e-12)
        assert np.all(check.rho >= 0.5 - 1e-12)

    def test_deterministic_start_is_certain_at_time_zero(self):
        spec = two_state_spec(0.3, 0.2, initial=(1.0, 0.0))
        _, obs = sample(spec, 20, seed=3)
        check = verify_bounds(spec, obs)
        assert check.rho[0] == pytest.approx(1.0, abs=1e-12)
        assert check.bounds[0] == 1.0

    def test_position_bounds_layout(self):
        spec = two_state_spec(0.3, 0.2)
        report = viterbi_bounds(spec)
        vec = position_bounds(report, 5)
        assert vec[0] == report.first_bound
        assert vec[-1] == report.last_bound
        assert np.all(vec[1:-1] == report.interior_bound)


class TestCheckCluster:
    def test_four_state_model_with_shared_atom(self):
        ok, r = check_cluster(small_probability_model(), [0, 1, 2, 3], ["z"])
        assert ok and r == 2

    def test_all_positive_transitions_give_r_one(self):
        spec = ModelSpec(
            [[0.6, 0.4], [0.3, 0.7]],
            [0.5, 0.5],
            CategoricalEmission([[0.5, 0.5], [0.4, 0.6]], ("a", "b")),
        )
        ok, r = check_cluster(spec, [0, 1], ["a", "b"])
        assert ok and r == 1

    def test_periodic_block_fails(self):
        spec = ModelSpec(
            [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.3, 0.3, 0.4]],
            [1 / 3, 1 / 3, 1 / 3],
            TableEmission([[1.0, 0.5], [1.0, 0.5], [0.0, 1.0]], ("c", "o")),
        )
        assert check_cluster(spec, [0, 1], ["c"]) == (False, 0)

    def test_detectability_violations_fail(self):
        spec = small_probability_model()
        # atom x has zero density under state 1, so it cannot be in the core
        assert check_cluster(spec, [0, 1, 2, 3], ["x"]) == (False, 0)
        # atom z is emitted by states outside the subset too
        assert check_cluster(spec, [0, 1], ["z"]) == (False, 0)

    def test_gaussian_emission_rejected(self):
        spec = ModelSpec(
            [[0.5, 0.5], [0.5, 0.5]], [0.5, 0.5], GaussianEmission([0, 1], [1, 1])
        )
        with pytest.raises(ValueError, match="table emission"):
            check_cluster(spec, [0, 1], [0])


def naive_stopping_times(obs, core, r):
    x = np.asarray(obs)
    n = len(x)
    in_core = np.isin(x, np.asarray(core))
    w = np.empty(n, dtype=int)
    u = np.empty(n, dtype=int)
    for t in range(n):
        w[t] = n - 1
        for ww in range(t + r + 1, n):
            if in_core[ww - r : ww + 1].all():
                w[t] = ww
                break
        u[t] = 0
        for uu in range(t - r - 1, -1, -1):
            if in_core[uu : uu + r + 1].all():
                u[t] = uu
                break
    return w, u


class TestStoppingTimes:
    def test_no_core_word_present(self):
        cluster = ClusterSpec(states=(0, 1), core=(5,), r=1)
        obs = np.array([0, 1, 2, 0, 1])
        w, u = stopping_times(obs, cluster)
        assert np.all(w == 4) and np.all(u == 0)

    def test_every_symbol_in_core(self):
        r = 1
        cluster = ClusterSpec(states=(0, 1), core=(0,), r=r)
        n = 9
        obs = np.zeros(n, dtype=int)
        w, u = stopping_times(obs, cluster)
        t = np.arange(n)
        np.testing.assert_array_equal(w, np.minimum(t + r + 1, n - 1))
        np.testing.assert_array_equal(u, np.maximum(t - r - 1, 0))

    def test_single_word_hand_case_and_naive_scan(self):
        r = 1
        cluster = ClusterSpec(states=(0,), core=(1,), r=r)
        obs = np.array([0, 0, 0, 1, 1, 0, 0, 0])  # word occupies positions 3..4
        w, u = stopping_times(obs, cluster)
        ref_w, ref_u = naive_stopping_times(obs, (1,), r)
        np.testing.assert_array_equal(w, ref_w)
        np.testing.assert_array_equal(u, ref_u)
        assert w[0] == 4 and w[2] == 4 and w[3] == 7 and u[6] == 3 and u[3] == 0

    def test_randomized_against_naive_scan(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(2, 30))
            r = int(rng.integers(0, 3))
            obs = rng.integers(0, 3, size=n)
            core = (0, 1) if rng.random() < 0.5 else (0,)
            cluster = ClusterSpec(states=(0,), core=core, r=r)
            w, u = stopping_times(obs, cluster)
            ref_w, ref_u = naive_stopping_times(obs, core, r)
            np.testing.assert_array_equal(w, ref_w)
            np.testing.assert_array_equal(u, ref_u)


def extended_categorical_model(p_core):
    """Four-state chain where every state emits the shared atom z with weight p."""
    base = small_probability_model()
    q = 1.0 - p_core
    probs = np.array(
        [
            [q, 0.0, p_core],
            [0.0, q, p_core],
            [q, 0.0, p_core],
            [q, 0.0, p_core],
        ]
    )
    return ModelSpec(
        base.transition, base.initial, CategoricalEmission(probs, ("x", "y", "z"))
    )


def run_survival_oracle(p, r, horizon):
    """Exact P(no run of r+1 core symbols within k steps) by state propagation."""
    dist = np.zeros(r + 1)
    dist[0] = 1.0
    surv = np.empty(horizon + 1)
    surv[0] = 1.0
    for k in range(1, horizon + 1):
        new = np.zeros(r + 1)
        new[0] = dist.sum() * (1 - p)
        new[1:] = dist[:-1] * p
        dist = new
        surv[k] = dist.sum()
    return surv


class TestEmpiricalTail:
    def test_word_completes_immediately_when_everything_is_core(self):
        spec = ModelSpec(
            [[0.6, 0.4], [0.3, 0.7]],
            [0.5, 0.5],
            CategoricalEmission([[1.0], [1.0]], ("z",)),
        )
        cluster = ClusterSpec(states=(0, 1), core=(0,), r=1)
        report = empirical_tail(spec, cluster, samples=500, horizon=6, seed=5)
        assert report.survival[2] == 0.0
        assert not report.low_observation_warning

    def test_survival_is_monotone_nonincreasing(self):
        spec = extended_categorical_model(0.35)
        ok, r = check_cluster(spec, [0, 1, 2, 3], ["z"])
        assert ok
        cluster = ClusterSpec(states=(0, 1, 2, 3), core=tuple(spec.emission.encode(["z"])), r=r)
        report = empirical_tail(spec, cluster, samples=2000, horizon=50, seed=6)
        assert np.all(np.diff(report.survival) <= 1e-12)
        assert report.decay_slope is not None and report.decay_slope < 0

    def test_against_absorption_oracle(self):
        p = 0.4
        spec = extended_categorical_model(p)
        ok, r = check_cluster(spec, [0, 1, 2, 3], ["z"])
        cluster = ClusterSpec(states=(0, 1, 2, 3), core=tuple(spec.emission.encode(["z"])), r=r)
        horizon = 40
        report = empirical_tail(spec, cluster, samples=6000, horizon=horizon, seed=7)
        exact = run_survival_oracle(p, r, horizon)
        assert np.max(np.abs(report.survival - exact)) < 0.03

    def test_warning_when_word_rarely_seen(self):
        spec = extended_categorical_model(0.02)
        cluster = ClusterSpec(states=(0, 1, 2, 3), core=(2,), r=2)
        report = empirical_tail(spec, cluster, samples=300, horizon=20, seed=8)
        assert report.low_observation_warning
        assert report.censored_fraction > 0.5
