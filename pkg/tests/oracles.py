"""Brute-force reference implementations, independent of the trellis code.

Everything here enumerates complete state paths.  Scores accumulate left
to right in exactly the order the dynamic programs use, so score-equal
paths are float-identical between the two implementations and the shared
tie-break (prefer the smaller state at every backtracking choice, i.e.
the reversed-lexicographically smallest optimal path) can be compared
exactly.
"""

import itertools

import numpy as np

from hmmseg.inference import _log_inputs


def log_inputs(spec, obs, pins=None):
    return _log_inputs(spec, obs, pins)


def enumerate_paths(log_pi, log_P, log_b):
    """All K^n paths with their joint log scores (DP accumulation order)."""
    n, k = log_b.shape
    paths = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)
    scores = log_pi[paths[:, 0]] + log_b[0, paths[:, 0]]
    for t in range(1, n):
        scores = scores + log_P[paths[:, t - 1], paths[:, t]] + log_b[t, paths[:, t]]
    return paths, scores


def brute_viterbi(log_pi, log_P, log_b, pins=()):
    """Exhaustive restricted argmax under the shared tie-break, or None."""
    paths, scores = enumerate_paths(log_pi, log_P, log_b)
    keep = np.ones(len(paths), dtype=bool)
    for t, w in pins:
        keep &= paths[:, t] == w
    scores = np.where(keep, scores, -np.inf)
    best = scores.max()
    if best == -np.inf:
        return None
    candidates = paths[scores == best]
    order = min(range(len(candidates)), key=lambda i: tuple(candidates[i][::-1]))
    return candidates[order]


def brute_smoothing(log_pi, log_P, log_b, pins=()):
    """Posterior marginals by summing path probabilities, or None."""
    n, k = log_b.shape
    paths, scores = enumerate_paths(log_pi, log_P, log_b)
    keep = np.ones(len(paths), dtype=bool)
    for t, w in pins:
        keep &= paths[:, t] == w
    probs = np.where(keep, np.exp(scores), 0.0)
    total = probs.sum()
    if total == 0.0:
        return None
    marg = np.empty((n, k))
    for t in range(n):
        marg[t] = np.bincount(paths[:, t], weights=probs, minlength=k)
    return marg / total


def brute_log_likelihood(log_pi, log_P, log_b, pins=()):
    paths, scores = enumerate_paths(log_pi, log_P, log_b)
    keep = np.ones(len(paths), dtype=bool)
    for t, w in pins:
        keep &= paths[:, t] == w
    probs = np.where(keep, np.exp(scores), 0.0)
    total = probs.sum()
    return float(np.log(total)) if total > 0 else -np.inf


def brute_pmap(log_pi, log_P, log_b, pins=()):
    marg = brute_smoothing(log_pi, log_P, log_b, pins)
    if marg is None:
        return None
    return np.argmax(marg, axis=1)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def random_model(rng, k=None, with_zeros=False, emission_kind=None, stationary_start=False):
    """A random small model, optionally with zeroed transition entries."""
    from hmmseg.model import (
        CategoricalEmission,
        GaussianEmission,
        ModelSpec,
        stationary_distribution,
    )

    k = int(k if k is not None else rng.integers(2, 4))
    P = rng.dirichlet(np.full(k, float(rng.uniform(0.4, 3.0))), size=k)
    if with_zeros:
        for row in range(k):
            n_zero = int(rng.integers(0, k - 1))
            if n_zero:
                cols = rng.choice(k, size=n_zero, replace=False)
                P[row, cols] = 0.0
                P[row] /= P[row].sum()
    pi = rng.dirichlet(np.ones(k))
    if with_zeros and rng.random() < 0.3 and k > 1:
        pi[int(rng.integers(0, k))] = 0.0
        pi /= pi.sum()
    kind = emission_kind or ("categorical" if rng.random() < 0.5 else "gaussian")
    if kind == "categorical":
        a = int(rng.integers(2, 5))
        B = rng.dirichlet(np.ones(a), size=k)
        if with_zeros:
            for row in range(k):
                if rng.random() < 0.4 and a > 1:
                    col = int(rng.integers(0, a))
                    B[row, col] = 0.0
                    B[row] /= B[row].sum()
        emission = CategoricalEmission(B, tuple(f"s{j}" for j in range(a)))
    else:
        emission = GaussianEmission(rng.normal(0, 1.5, size=k), rng.uniform(0.3, 2.0, size=k))
    spec = ModelSpec(P, pi, emission)
    if stationary_start:
        spec = ModelSpec(P, stationary_distribution(spec), emission)
    return spec


def random_instance(rng, k=None, n=None, with_zeros=False, emission_kind=None):
    """Random model plus observations sampled from it (hence admissible)."""
    from hmmseg.model import sample

    spec = random_model(rng, k=k, with_zeros=with_zeros, emission_kind=emission_kind)
    n = int(n if n is not None else rng.integers(2, 9))
    _, obs = sample(spec, n, rng)
    return spec, obs
