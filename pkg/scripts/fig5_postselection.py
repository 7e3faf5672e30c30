"""Post-selection sweep under the log-normal channel."""

from _common import binomial_ensemble, parser, write

from atmosim import io
from atmosim.pdt import LogNormalPDT, discretize
from atmosim.pipeline import nonclassical_threshold, postselection_sweep


def main():
    p = parser(__doc__, M=5 * 10**7)
    args = p.parse_args()
    ens = binomial_ensemble(args)
    pdt = discretize(LogNormalPDT.from_variance(-1.75, 0.55), args.n)
    thresholds = [j / args.n for j in range(args.n + 1)]
    sweep = postselection_sweep(ens, pdt, (2, 8), thresholds, B=args.B, seed=args.seed, threads=args.threads)
    for K in (2, 8):
        print(f"K={K}: nonclassical for eta_ps >= {nonclassical_threshold(sweep, K)}")
    write(args, "postselection.csv", io.sweep_to_csv(sweep))


if __name__ == "__main__":
    main()
