"""Discretized log-normal PDT and its moment errors against grid resolution."""

from _common import parser, write

from atmosim.pdt import LogNormalPDT, density, discretization_report, discretize

RESOLUTIONS = (10, 20, 50, 100, 200, 500)


def main():
    args = parser(__doc__).parse_args()
    model = LogNormalPDT.from_variance(-1.75, 0.55)
    pdt = discretize(model, args.n)
    rows = ["eta,weight,density_times_step"]
    for j, w in enumerate(pdt.weights):
        eta = j / args.n
        rows.append(f"{eta!r},{float(w)!r},{float(density(model, eta)) / args.n!r}")
    write(args, "pdt.csv", "\n".join(rows) + "\n")

    rows = ["n,convention,mean,variance,skewness"]
    for n in RESOLUTIONS:
        for key, triple in discretization_report(model, discretize(model, n)).items():
            rows.append(",".join([str(n), key, *(repr(float(v)) for v in triple)]))
    write(args, "discretization_errors.csv", "\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
