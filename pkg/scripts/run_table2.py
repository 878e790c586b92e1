"""Per-test-set variability at pi1 = 0.05 with 100-instance test sets."""

from _common import parse_args, run, seeds, summarize


def main():
    ap = parse_args(__doc__)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--retrain", action="store_true", help="draw a fresh training set per trial")
    args = ap.parse_args()
    rows = run("table2", args.out, seeds=seeds(args.seeds), jobs=args.jobs,
               trials=args.trials, retrain_per_trial=args.retrain)
    summarize(rows)


if __name__ == "__main__":
    main()
