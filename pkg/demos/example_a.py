"""Learn an H-infinity controller for the two-state nonlinear plant from one trajectory.

Fifty 0.05 s windows of random, piecewise-constant inputs are recorded from
x0 = (0.4, 0.5).  Off-policy alpha-PI then fits the critic, actor and
disturbance weights from those data alone, for several step lengths alpha.
Finally the learned actor is replayed against a decaying cosine disturbance.

    python demos/example_a.py
"""
import numpy as np

from alphapi.basis import format_terms
from alphapi.experiments import ExampleAConfig, run_example_a

base = ExampleAConfig()
print("critic basis:", format_terms(base.bases().critic.terms).replace("\n", " | "))

# the fixed point does not depend on alpha, only the path to it does
for alpha in (0.3, 0.6, 1.0):
    res = run_example_a(ExampleAConfig(alpha=alpha))
    print(f"alpha={alpha:.1f}  iterations={res.solve.iterations:3d}  "
          f"Wc={np.array2string(res.solve.weights.critic, precision=4)}")

# a fresh exploration seed gives a slightly different critic
for seed in (0, 1, 2):
    res = run_example_a(ExampleAConfig(seed=seed))
    note = res.replay_error or f"attenuation after 10 s: {res.attenuation_final:.3f}"
    print(f"seed {seed}: {note}")
