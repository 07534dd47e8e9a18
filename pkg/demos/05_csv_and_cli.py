"""From a pair CSV to a summary table through the command line.

``paircal gen`` writes a synthetic dataset in the pair format (covariates of
both units plus both potential outcomes). ``paircal run`` appends one JSON
line per replication and budget; ``paircal report`` aggregates them. The
same calls work through the installed ``paircal`` script.
"""
import tempfile
from pathlib import Path

from paircal.cli import main
from paircal.datagen import load_pairs_csv

work = Path(tempfile.mkdtemp())
cfg = work / "synthetic.cfg"
cfg.write_text("population_size = 2000\nmatch_tol = 0.01\n")

main(["gen", "--config", str(cfg), "--out", str(work / "pairs.csv"), "--seed", "1"])
ds = load_pairs_csv(work / "pairs.csv")
print(f"loaded {len(ds)} pairs from {work / 'pairs.csv'}")

results = work / "results.jsonl"
for design in ("robustcal", "conventional"):
    main(["run", "--design", design, "--data", str(work / "pairs.csv"), "--budgets", "200,400",
          "--runs", "5", "--seed", "0", "--out", str(results)])

main(["report", "--in", str(results), "--out", str(work / "summary.csv")])
print((work / "summary.csv").read_text())
