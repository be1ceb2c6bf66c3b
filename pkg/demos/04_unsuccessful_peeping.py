"""Peeping that hurts: revealing a true state can lower expected accuracy.

In a three-state model observed as x y z ... z a x, the unrestricted
Viterbi path sits in state 0 the whole time.  Revealing the hidden state
just before the end either changes nothing (state 0) or, if state 1 shows
up, drags the restricted path through state 1 for the entire stretch.
Averaged over the revealed value, the expected number of correct states
drops once the stretch is long enough.
"""

from hmmseg.experiments import (
    PeepingConfig,
    pin_probability,
    pin_probability_limit,
    unsuccessful_peeping_report,
)

print("epsilon = 0.2, bump = 1:")
print("  m    time-in-0   1 + time-in-1   harmful?   accuracy gap")
for m in (3, 5, 6, 7, 98, 998):
    rep = unsuccessful_peeping_report(PeepingConfig(m=m, epsilon=0.2, bump=1.0))
    print(
        f"  {m:4d}  {rep.lhs:9.2f}   {rep.rhs:12.2f}   {str(rep.peeping_harmful):7s}"
        f"   {rep.accuracy_gap:+.4f}"
    )

print("\nthe flip happens at m = 7: from there on, conditioning on the revealed")
print("state 1 costs more accuracy in the interior than the one revealed point gains")

rep = unsuccessful_peeping_report(PeepingConfig(m=7, epsilon=0.2, bump=1.0))
print("\nstructural checks at m = 7:")
print("  unrestricted Viterbi constant in state 0:", rep.viterbi_constant)
print("  restricted path is 0,1,...,1,0:", rep.restricted_shape)
print("  gap via conditional sums:", round(rep.accuracy_gap_via_sums, 6))
print("  gap via direct decoding: ", round(rep.accuracy_gap, 6))

print("\nthe probability of actually revealing state 1 stays bounded away from 0:")
for eps in (0.2, 0.01):
    fin = pin_probability(PeepingConfig(m=2000, epsilon=eps, bump=1.0))
    lim = pin_probability_limit(eps)
    print(f"  epsilon={eps}: finite-m {fin:.6f}, limit {lim:.6f}")
print("so the average accuracy loss grows without bound as m increases")
