"""Targeted enrolment against a randomised trial.

RobustCAL spends its label budget only where a bootstrapped committee still
thinks the effect might live; the conventional design enrols uniformly. Both
feed the same betting test. One run at the largest budget yields all smaller
budgets through checkpoints.
"""
from paircal.designs import RunConfig
from paircal.harness import run_replications, summarize

budgets = [200, 300, 400, 500]
rows = []
for design in ("robustcal", "conventional"):
    recs = run_replications(RunConfig(design=design, seed=0), 20, budgets=budgets)
    rows += summarize(recs)

print(f"{'design':13s} {'budget':>6s} {'power':>6s} {'stop':>7s} {'tpr':>6s} {'precision':>9s}")
for s in rows:
    print(f"{s.design:13s} {s.budget:6d} {s.rejection_rate:6.2f} {s.stop_mean:7.1f} "
          f"{s.tpr_mean:6.3f} {s.precision_mean:9.3f}")
