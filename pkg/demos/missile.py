"""Online learned guidance against a weaving and a non-maneuvering target.

Every 0.5 s the learner refits the actor from the last 100 windows of
line-of-sight data and the missile flies the new law until the next
refit.  The target starts a 9 g weave after 1.5 s.

    python demos/missile.py
"""
import numpy as np

from alphapi.missile import EngagementConfig, ManeuverSpec, run_engagement

for label, man in (("weaving", ManeuverSpec()), ("non-maneuvering", ManeuverSpec(kind="none"))):
    res = run_engagement(EngagementConfig(maneuver=man))
    iters = [c.iterations for c in res.cycles]
    flagged = sum(c.failed for c in res.cycles)
    print(f"{label}: miss {res.miss_distance:.3f} m at t = {res.intercept_time:.3f} s")
    print(f"  {len(res.cycles)} learning cycles, {flagged} flagged, "
          f"iterations min/median/max = {min(iters)}/{int(np.median(iters))}/{max(iters)}")
    peak = np.abs(res.accel[:, 1]).max() / 9.81
    print(f"  peak missile command {peak:.1f} g")

# guidance switched off, for scale
coast = run_engagement(EngagementConfig(guidance="none"))
print(f"no guidance: miss {coast.miss_distance:.1f} m")
