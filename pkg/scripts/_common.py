"""Shared setup for the experiment scripts."""

import argparse
import os
from pathlib import Path

from atmosim.detector import DetectorConfig
from atmosim.pipeline import build_ensemble, calibrate_source

SEED = 20190425


def parser(description, M=10**6):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--output", type=Path, default=Path("results"), help="directory for CSV output")
    p.add_argument("--seed", type=int, default=SEED)
    p.add_argument("--M", type=int, default=M, help="trials per transmittance level")
    p.add_argument("--B", type=int, default=1000, help="bootstrap resamples")
    p.add_argument("--n", type=int, default=100, help="transmittance grid resolution")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    return p


def binomial_ensemble(args, cfg=DetectorConfig()):
    """Sampled ensemble of the calibrated sub-Poissonian source at 2.7 mean clicks."""
    src = calibrate_source(2.7, cfg, family="binomial")
    return build_ensemble(src, cfg, args.n, "sampled", M=args.M, seed=args.seed)


def write(args, name, text):
    args.output.mkdir(parents=True, exist_ok=True)
    path = args.output / name
    path.write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {path}")
