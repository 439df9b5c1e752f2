"""Check the data-driven learner against the exact Riccati solution.

On a linear plant with quadratic cost the HJI equation reduces to the game
algebraic Riccati equation, so the learned critic can be compared with P
entry by entry.

    python demos/linear_oracle.py
"""
import numpy as np

from alphapi.experiments import LinearGameConfig, run_oracle

for alpha in (0.3, 0.6, 1.0):
    res = run_oracle(LinearGameConfig(alpha=alpha))
    print(f"alpha={alpha:.1f}: {res.solve.iterations} iterations, "
          f"max relative delta {res.max_relative_delta:.2e}")

print("\noracle P:\n", np.array2string(res.gare.P, precision=6))
print("learned P:\n", np.array2string(res.P_learned, precision=6))
for name, ref, got, rel in res.deltas:
    print(f"  {name:7s} {ref:+.6f} {got:+.6f}  {rel:.1e}")

# shrinking gamma towards the minimal attenuation level makes the game infeasible
for gamma in (2.0, 1.2, 0.8):
    try:
        r = run_oracle(LinearGameConfig(gamma=gamma))
        print(f"gamma={gamma}: P11={r.gare.P[0, 0]:.4f}")
    except Exception as exc:
        print(f"gamma={gamma}: {type(exc).__name__}: {exc}")
