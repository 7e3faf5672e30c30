"""Nonclassicality against turbulence strength for a beam-wandering channel."""

from _common import binomial_ensemble, parser, write

from atmosim import io
from atmosim.pipeline import LinearWanderingMapping, rytov_sweep

GRID = (0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)


def main():
    p = parser(__doc__)
    p.add_argument("--eta0", type=float, default=0.9, help="transmittance of the centred beam")
    p.add_argument("--variance-per-rytov", type=float, default=0.05, help="wandering variance per unit Rytov parameter")
    args = p.parse_args()
    mapping = LinearWanderingMapping(args.eta0, 2.0, 1.0, args.variance_per_rytov, n=args.n)
    sweep = rytov_sweep(binomial_ensemble(args), mapping, (2, 8), GRID, B=args.B, seed=args.seed, threads=args.threads)
    write(args, "rytov.csv", io.sweep_to_csv(sweep))


if __name__ == "__main__":
    main()
