"""STL-constrained model-predictive push recovery on a reduced-order biped.

Layers, bottom up:

* ``formula`` / ``semantics`` -- signal temporal logic over sampled traces,
  with exact and smooth (differentiable) robustness;
* ``reduced_model``           -- enhanced LIPM hybrid dynamics;
* ``locomotion_spec``         -- the walking specification and the
  orbital-energy robust region;
* ``collision``               -- capsule oracle and the learned margin MLP;
* ``planner``                 -- the STL-MPC nonlinear program;
* ``harness``                 -- closed-loop episodes and the force sweep.
"""

from .formula import (And, Always, Eventually, Formula, Not, Or, ParseError,
                      Predicate, Until, format_formula, parse_formula)
from .semantics import (HorizonError, Robustness, Trace, robustness,
                        satisfies, smooth_robustness, smooth_robustness_value)
from .reduced_model import (ControlInput, ModelParams, ReducedState,
                            lipm_flow, reset_map, rollout, swing_trajectory)
from .locomotion_spec import (FootBound, GaitParams, RiemannianRegion,
                              build_loco_spec, nominal_gait,
                              riemannian_channels, riemannian_distance)
from .collision import (LegGeometry, Mlp, capsule_margin, mlp_margin,
                        sample_dataset, train_mlp)
from .planner import (MpcController, NlpProblem, PlanResult, PlannerSetup,
                      SolverConfig, build_nlp, solve)
from .harness import (EpisodeResult, Perturbation, SpiderTable, apply_push,
                      baseline_controller, max_recoverable_force,
                      run_episode, sweep)
from .config import Config, load_config

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
