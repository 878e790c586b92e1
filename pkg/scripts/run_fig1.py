"""KL and 1 - F1 of a model that differs from the truth only in its assumed pi1."""

import numpy as np
from _common import parse_args, run, seeds


def main():
    args = parse_args(__doc__).parse_args()
    rows = run("fig1", args.out, seeds=seeds(args.seeds), jobs=args.jobs)
    for setting in dict.fromkeys(r.setting for r in rows):
        cell = [r for r in rows if r.setting == setting]
        kl = np.array([r.kl for r in cell])
        loss = np.array([1 - r.f1 for r in cell])
        print(f"{setting}: KL min at {cell[int(np.argmin(kl))].extra}, "
              f"1-F1 min at {cell[int(np.argmin(loss))].extra}")


if __name__ == "__main__":
    main()
