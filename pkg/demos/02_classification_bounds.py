"""Lower bounds for Viterbi classification probabilities.

With all transitions positive there is a data-independent floor under
every classification probability.  With forbidden transitions no such
floor exists: a four-state construction drives the probability to zero
geometrically.  A cluster of states with a shared detectable symbol
restores a data-dependent bound through two observable stopping times.
"""

import numpy as np

from hmmseg import (
    CategoricalEmission,
    ClusterSpec,
    ModelSpec,
    check_cluster,
    empirical_tail,
    sample,
    sigma,
    stopping_times,
    verify_bounds,
    viterbi_bounds,
)
from hmmseg.experiments import counterexample_small_prob, small_probability_model

# --- positive transitions: a constant floor --------------------------------

eps = 0.15
spec = ModelSpec(
    [[1 - eps, eps], [eps, 1 - eps]],
    [0.5, 0.5],
    CategoricalEmission([[0.8, 0.2], [0.25, 0.75]], ("u", "v")),
)
sp = sigma(spec.transition)
print(f"sigma1={sp.sigma1:.4f} sigma2={sp.sigma2:.4f}")
report = viterbi_bounds(spec, stationary=True)
print(f"interior bound: {report.interior_bound:.5f}")
print(f"endpoint bounds: first={report.first_bound:.5f} last={report.last_bound:.5f}")

_, obs = sample(spec, 200, seed=1)
check = verify_bounds(spec, obs)
print(
    f"observed min rho: {check.rho.min():.5f}, worst margin {check.worst_margin:.5f},"
    f" violations: {check.violations}"
)

# --- forbidden transitions: the floor disappears ----------------------------

print("\nfour-state model, m copies of x then one y:")
for m in (5, 10, 20, 40):
    rep = counterexample_small_prob(m)
    print(
        f"  m={m:3d}: Viterbi passes state 0 up to the switch, "
        f"P(correct at t=m-1) = {rep.smoothing_at_switch:.2e} "
        f"(closed form {rep.closed_form:.2e})"
    )
print("the probability vanishes although the path has maximal posterior")

# --- the cluster machinery ---------------------------------------------------

base = small_probability_model()
ok, r = check_cluster(base, [0, 1, 2, 3], ["z"])
print(f"\nshared atom z makes all four states a cluster: {ok}, primitivity exponent r={r}")

obs = base.emission.encode(list("xxzzzxxxyzzzxy"))
cluster = ClusterSpec(states=(0, 1, 2, 3), core=tuple(base.emission.encode(["z"])), r=r)
w, u = stopping_times(obs, cluster)
print("observations:", "".join("xyz"[i] for i in obs))
print("w_t:", w.tolist())
print("u_t:", u.tolist())
print("short w_t - u_t gaps mean the bound is tight near core words")

# a generative variant: every state emits z with weight 0.3
probs = np.array(
    [[0.7, 0.0, 0.3], [0.0, 0.7, 0.3], [0.7, 0.0, 0.3], [0.7, 0.0, 0.3]]
)
gen = ModelSpec(base.transition, base.initial, CategoricalEmission(probs, ("x", "y", "z")))
tail = empirical_tail(gen, cluster, samples=4000, horizon=40, seed=2)
print("\nwaiting-time tail for the first fully observed core word:")
for k in (3, 6, 10, 20, 40):
    print(f"  P(W* - t > {k:2d}) = {tail.survival[k]:.4f}")
print(f"fitted log-linear decay slope: {tail.decay_slope:.4f} (geometric tail)")
