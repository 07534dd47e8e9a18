"""The finite-class engine with its doubling diagnostics.

The hypothesis class is a grid of thresholds t, each claiming the effect
region is {x1 + t < x2}. Points are queried only where some surviving rule
predicts an effect. At every power of two, rules whose mistake count exceeds
the leader's by more than the confidence slack are dropped. The true
threshold should survive and the enrolment region should shrink onto the
true region.
"""
from paircal.datagen import SyntheticConfig
from paircal.designs import RunConfig
from paircal.theory import run_theoretical_robustcal

cfg = RunConfig(design="theory", budget=4000, match_tol=0.0, stop_on_reject=False, seed=3,
                synthetic=SyntheticConfig(sigma2=1e-12))
r = run_theoretical_robustcal(cfg)
print(f"{'m':>6s} {'queried':>8s} {'active':>7s} {'truth':>6s} {'enrol mass':>11s} {'ratio':>7s}")
for s in r.monitor:
    print(f"{s.m:6d} {s.queried:8d} {s.n_active:7d} {str(s.truth_active):>6s} "
          f"{s.enrolled_mass:11.4f} {s.ratio:7.3f}")
print(f"decision {r.decision}, final wealth {r.wealth_final:.3g}")
