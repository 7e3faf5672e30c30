"""Minimal eigenvalues of squeezed vacuum under the click model, swept over squeezing and efficiency.

Shows that the moment matrix stays positive semidefinite, so a squeezed source alone
cannot certify nonclassicality with this detector model.
"""

import numpy as np
from _common import parser, write

from atmosim.detector import DetectorConfig, click_statistics, mean_clicks, moment_vector
from atmosim.nonclassicality import min_eigenvalue, moment_matrix
from atmosim.source import squeezed_vacuum


def main():
    args = parser(__doc__).parse_args()
    rows = ["squeeze,efficiency,mean_clicks,e2,e4,e6,e8"]
    for eff in (0.22, 0.5, 1.0):
        cfg = DetectorConfig(8, eff)
        for r in np.round(np.linspace(0.05, 3.0, 60), 4):
            cs = click_statistics(squeezed_vacuum(float(r)), cfg)
            mv = moment_vector(cs)
            es = [min_eigenvalue(moment_matrix(mv, K)) for K in (2, 4, 6, 8)]
            rows.append(",".join([repr(float(r)), repr(eff), repr(mean_clicks(cs)), *(repr(e) for e in es)]))
    write(args, "squeezed_feasibility.csv", "\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
