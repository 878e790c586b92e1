"""Every table1 setting: the default mixture and its one-parameter variants."""

from pathlib import Path

from _common import parse_args, run, seeds, summarize

from fmeasure.gauss_sim import TABLE1_SETTINGS


def main():
    ap = parse_args(__doc__, default_seeds="0,1,2,3,4,5,6,7,8,9")
    ap.add_argument("--settings", default=",".join(TABLE1_SETTINGS))
    args = ap.parse_args()
    rows = []
    for setting in args.settings.split(","):
        base = args.out or Path("results") / "table1.csv"
        out = base.with_name(f"{base.stem}-{setting}.csv")
        rows += run("table1", out, setting=setting, seeds=seeds(args.seeds), jobs=args.jobs)
    summarize(rows)


if __name__ == "__main__":
    main()
