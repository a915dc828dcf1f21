"""Nominal walking, then a lateral shove, side by side.

Rolls the closed loop with the capture-point baseline and with the
STL-MPC planner, first unperturbed and then with a push toward the
stance leg at mid-swing.  The crossed-leg recovery threads the swing
foot within a couple of centimeters of the stance leg, so the full
default-budget collision net is trained first (about two minutes);
pass a saved model path to skip that.
Run with:  python3 demos/walk_and_push.py [model.json]
"""

import sys

from stlwalk.collision import Mlp
from stlwalk.config import Config
from stlwalk.harness import (BASELINE, STL_MPC, Perturbation,
                             default_collision_net, make_planner_setup,
                             run_episode)

cfg = Config()

if len(sys.argv) > 1:
    net = Mlp.load(sys.argv[1])
else:
    print("training the default collision net (about two minutes) ...")
    net = default_collision_net(cfg)
setup = make_planner_setup(cfg, net)


def report(tag, res):
    kf = "".join("G" if k.good else "." for k in res.keyframes)
    print(f"  {tag:22s} recovered={str(res.recovered):5s} "
          f"steps={res.steps_to_recover} keyframes={kf} "
          f"margin_min={res.min_collision_margin:+.3f}m "
          f"crossed={res.crossed}")


print()
print("unperturbed walking (6 steps)")
report("baseline", run_episode(BASELINE, None, 6, cfg))
report("stl_mpc", run_episode(STL_MPC, None, 6, cfg, setup=setup))

# direction 3 is straight toward the stance side during left stance;
# this is the shove that forces a crossed-leg recovery step
push = Perturbation(direction_index=3, magnitude=140.0, phase=0.25,
                    duration=cfg.sweep.push_duration)
dv = push.magnitude * push.duration / cfg.model.mass
print()
print(f"lateral push: {push.magnitude:.0f} N for {push.duration}s "
      f"(dv = {dv:.2f} m/s) at phase {push.phase}")
report("baseline", run_episode(BASELINE, push, 7, cfg))
res = run_episode(STL_MPC, push, 7, cfg, setup=setup)
report("stl_mpc", res)

if res.first_post_push_foothold is not None:
    fh = res.first_post_push_foothold
    print()
    print(f"  first post-push foothold y = {fh[1]:+.3f} vs stance "
          f"y = {res.push_stance_y:+.3f}: the swing foot "
          f"{'crossed' if res.crossed else 'did not cross'} the stance line")
    print(f"  ground-truth leg clearance stayed >= "
          f"{res.min_collision_margin:+.3f} m throughout")
