import argparse
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from fmeasure.gauss_sim import default_config, run_experiment, write_csv


def parse_args(description: str, default_seeds: str = "0"):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--seeds", default=default_seeds, help="comma-separated seeds")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None, help="CSV output (default: results/<suite>.csv)")
    return ap


def seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s.strip())


def run(suite: str, out: Path | None, **overrides):
    cfg = default_config(suite, **overrides)
    rows = run_experiment(cfg)
    out = out or Path("results") / f"{suite}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        write_csv(rows, fh)
    print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    return rows


def summarize(rows, by=("setting", "method", "feature_map")):
    """Print mean F1 per cell over integer-trial rows."""
    cells = defaultdict(list)
    for r in rows:
        if isinstance(r.trial, int):
            cells[tuple(getattr(r, k) for k in by)].append(r.f1)
    for key, vals in cells.items():
        print(f"{' '.join(map(str, key)):40s} F1 {100 * np.mean(vals):6.2f}  (n={len(vals)})")
