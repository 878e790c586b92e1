"""Covariate shift: train on the mixture, test only where P(Y=1 | x) < 0.5."""

from _common import parse_args, run, seeds, summarize


def main():
    args = parse_args(__doc__).parse_args()
    summarize(run("domain-adapt", args.out, seeds=seeds(args.seeds), jobs=args.jobs))


if __name__ == "__main__":
    main()
