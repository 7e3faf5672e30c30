"""Minimal eigenvalue and significance against constant transmittance, K = 2 and 8."""

from _common import binomial_ensemble, parser, write

from atmosim import io
from atmosim.pipeline import constant_loss_sweep, nonclassical_threshold


def main():
    args = parser(__doc__).parse_args()
    sweep = constant_loss_sweep(binomial_ensemble(args), (2, 8), B=args.B, seed=args.seed, threads=args.threads)
    for K in (2, 8):
        print(f"K={K}: nonclassical for eta >= {nonclassical_threshold(sweep, K)}")
    write(args, "constant_loss.csv", io.sweep_to_csv(sweep))


if __name__ == "__main__":
    main()
