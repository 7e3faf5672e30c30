"""Significance over a grid of beta-binomial PDT shapes."""

from _common import binomial_ensemble, parser, write

from atmosim import io
from atmosim.pipeline import beta_scan, default_beta_grid


def main():
    p = parser(__doc__)
    p.add_argument("--points", type=int, default=12, help="grid points per shape parameter")
    args = p.parse_args()
    grid = default_beta_grid(args.points)
    sweep = beta_scan(binomial_ensemble(args), (2, 8), grid, grid, B=args.B, seed=args.seed, threads=args.threads)
    write(args, "beta_scan.csv", io.sweep_to_csv(sweep))


if __name__ == "__main__":
    main()
