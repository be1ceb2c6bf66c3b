"""Decoding basics: smoothing, Viterbi, pointwise MAP, and pin constraints.

Builds a small two-state model, samples a sequence, and walks through the
posterior queries.  Also shows how pinning a state reweights everything
and how the two standard alignments can disagree.
"""

import numpy as np

from hmmseg import (
    CategoricalEmission,
    ModelSpec,
    accuracy,
    classification_probabilities,
    forward_backward,
    path_log_posterior,
    pmap,
    sample,
    validate,
    viterbi,
)

spec = ModelSpec(
    transition=[[0.92, 0.08], [0.15, 0.85]],
    initial=[0.5, 0.5],
    emission=CategoricalEmission(
        [[0.55, 0.35, 0.10], [0.10, 0.35, 0.55]], ("low", "mid", "high")
    ),
)
print("model valid:", validate(spec).ok)

truth, obs = sample(spec, n=40, seed=0)
tables = forward_backward(spec, obs)
v = viterbi(spec, obs)
g = pmap(spec, obs)

print("\nlog-likelihood of the observations:", round(tables.log_likelihood, 4))
print("Viterbi alignment:      ", "".join(map(str, v)))
print("pointwise MAP alignment:", "".join(map(str, g)))
print("true hidden path:       ", "".join(map(str, truth)))
print("Viterbi errors:", int(np.sum(v != truth)), " PMAP errors:", int(np.sum(g != truth)))

# the pointwise MAP path maximizes the expected number of correct states,
# the Viterbi path maximizes the joint posterior
print("\naccuracy (expected correct states):")
print("  Viterbi:", round(accuracy(tables, v), 3))
print("  PMAP:   ", round(accuracy(tables, g), 3))
print("path log posterior:")
print("  Viterbi:", round(path_log_posterior(spec, obs, v), 4))
print("  PMAP:   ", round(path_log_posterior(spec, obs, g), 4))

# classification probabilities reveal where the alignment is shaky
rho = classification_probabilities(tables, v)
worst = int(np.argmin(rho))
print(f"\nleast certain Viterbi position: t={worst} with rho={rho[worst]:.3f}")

# pin the true state there and re-decode: the pinned position becomes
# certain and the path adjusts only locally
pins = [(worst, int(truth[worst]))]
tables_pinned = forward_backward(spec, obs, pins)
v_pinned = viterbi(spec, obs, pins)
print("pinned smoothing row:", np.round(tables_pinned.smoothing[worst], 6))
changed = np.nonzero(v_pinned != v)[0]
print("positions changed by the pin:", changed.tolist())
