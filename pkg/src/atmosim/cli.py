"""Command-line front end.

Exit codes: 0 success, 2 configuration or parameter error, 3 incomplete
ensemble, 4 ingestion or schema error. A CONSISTENT_CLASSICAL verdict is a
scientific outcome and exits 0.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import config as config_mod
from . import io
from .detector import DetectorConfig, click_statistics, mean_clicks
from .errors import (
    AtmosimError,
    ConfigurationError,
    IncompleteEnsembleError,
    IngestionError,
    SchemaError,
)
from .nonclassicality import classify
from .pdt import (
    BeamWanderingPDT,
    DiscretePDT,
    LogNormalPDT,
    beta_binomial,
    discretization_report,
    discretize,
    point_mass,
    uniform_density,
)
from .pipeline import (
    LinearWanderingMapping,
    TableMapping,
    atmospheric_run,
    beta_scan,
    build_ensemble,
    calibrate_source,
    constant_loss_sweep,
    default_beta_grid,
    export_ensemble,
    ingest_ensemble,
    postselection_sweep,
    rytov_sweep,
)
from .source import SourceConfig

EXIT_OK, EXIT_CONFIG, EXIT_INCOMPLETE, EXIT_INGEST = 0, 2, 3, 4
SWEEP_KINDS = ("constant-loss", "postselect", "rytov", "beta-scan")


def detector_of(cfg) -> DetectorConfig:
    d = cfg.detector
    return DetectorConfig(d.bins, d.efficiency, d.dark)


def source_of(cfg, det: DetectorConfig) -> SourceConfig:
    s = cfg.source
    if s.target_mean_clicks is not None:
        return calibrate_source(s.target_mean_clicks, det, s.mode_count, s.family, s.n_emitters)
    if s.family == "binomial" and s.emission_probability is None:
        raise ConfigurationError("binomial source needs source.emission_probability or source.target_mean_clicks")
    return SourceConfig(
        s.family,
        mean_photons=s.mean_photons,
        squeezes=s.squeezes,
        n_emitters=s.n_emitters,
        emission_probability=s.emission_probability or 0.0,
        photons=s.photons,
    )


def ensemble_of(cfg):
    if cfg.ensemble.data_dir is not None:
        return ingest_ensemble(cfg.ensemble.data_dir), None
    det = detector_of(cfg)
    src = source_of(cfg, det)
    e = cfg.ensemble
    ens = build_ensemble(src, det, e.n, e.mode, e.M, cfg.seed if e.mode == "sampled" else None)
    return ens, src


def model_of(cfg):
    """Continuous model (log-normal, beam wandering, tabulated, uniform) or a ready DiscretePDT."""
    c = cfg.channel
    if c.family == "log-normal":
        return LogNormalPDT.from_variance(c.mu, c.sigma2)
    if c.family == "beam-wandering":
        return BeamWanderingPDT(c.eta0, c.shape, c.scale, c.wander_variance)
    if c.family == "uniform":
        return uniform_density()
    if c.family == "tabulated":
        return io.read_density_csv(c.path)
    return None


def pdt_of(cfg, n: int) -> DiscretePDT:
    c = cfg.channel
    if c.family == "beta-binomial":
        return beta_binomial(n, c.alpha, c.beta)
    if c.family == "point-mass":
        return point_mass(n, c.eta)
    if c.family == "pdt-csv":
        pdt = io.read_pdt_csv(c.path)
        if pdt.n != n:
            raise IncompleteEnsembleError(f"PDT file {c.path} uses the grid 1/{pdt.n}, the ensemble 1/{n}")
        return pdt
    return discretize(model_of(cfg), n)


def mapping_of(cfg, n: int):
    r = cfg.rytov
    if r.mapping is None:
        raise ConfigurationError("rytov sweep needs rytov.mapping ('linear' or 'table')")
    if r.mapping == "linear":
        return LinearWanderingMapping(r.eta0, r.shape, r.scale, r.variance_per_rytov, n)
    entries = {}
    for row in r.table:
        if len(row) != 5:
            raise ConfigurationError("rytov.table rows must read [sigma_r2, eta0, shape, scale, wander_variance]")
        entries[float(row[0])] = tuple(float(v) for v in row[1:])
    return TableMapping(entries)


def _provenance(cmd, cfg):
    return {"command": cmd, "config_digest": cfg.digest(), "seed": cfg.seed, "config": {k: v for k, v in cfg.to_dict().items() if k != "output"}}


def _comments(cfg):
    return [f"config_digest: {cfg.digest()}", f"seed: {cfg.seed}"]


def _out(cfg, name) -> Path:
    return Path(cfg.output) / name


def _fmt_num(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    return f"{x:.4g}"


def cmd_discretize(cfg, args):
    n = cfg.ensemble.n
    pdt = pdt_of(cfg, n)
    model = model_of(cfg)
    payload = _provenance("discretize", cfg)
    payload["pdt"] = pdt.describe()
    if model is not None:
        report = discretization_report(model, pdt)
        payload["relative_errors"] = {k: list(v) for k, v in report.items()}
    io.write_text(_out(cfg, "pdt.csv"), io.pdt_to_csv(pdt, _comments(cfg)))
    io.write_text(_out(cfg, "discretization.json"), io.to_json(payload))
    print(f"wrote {_out(cfg, 'pdt.csv')} ({n + 1} rows)")
    for key, triple in payload.get("relative_errors", {}).items():
        print(f"relative errors ({key}): mean {_fmt_num(triple[0])}, variance {_fmt_num(triple[1])}, skewness {_fmt_num(triple[2])}")
    return EXIT_OK


def cmd_calibrate(cfg, args):
    det = detector_of(cfg)
    s = cfg.source
    target = s.target_mean_clicks if s.target_mean_clicks is not None else 2.7
    family = s.family if s.family in ("squeezed", "binomial") else "squeezed"
    src = calibrate_source(target, det, s.mode_count, family, s.n_emitters)
    achieved = mean_clicks(click_statistics(src.distribution(), det))
    payload = _provenance("calibrate", cfg)
    payload.update(source=src.to_dict(), target_mean_clicks=target, achieved_mean_clicks=achieved)
    io.write_text(_out(cfg, "calibration.json"), io.to_json(payload))
    print(f"calibrated {family} source: {src.to_dict()} -> {achieved:.9f} mean clicks")
    return EXIT_OK


def cmd_simulate(cfg, args):
    if cfg.ensemble.data_dir is not None:
        raise ConfigurationError("simulate builds an ensemble; unset ensemble.data_dir")
    ens, src = ensemble_of(cfg)
    d = _out(cfg, "ensemble")
    export_ensemble(ens, d, _comments(cfg))
    payload = _provenance("simulate", cfg)
    payload.update(source=src.to_dict(), n=ens.n, mode=cfg.ensemble.mode, M=cfg.ensemble.M)
    io.write_text(d / "manifest.json", io.to_json(payload))
    print(f"wrote {ens.n + 1} level files to {d}")
    return EXIT_OK


def _result_line(label, res, threshold):
    sig = res.significance
    return f"{label} K={res.K}: e_min={res.e_min:.6e} delta_e={res.delta_e:.3e} significance={sig:.3f} -> {classify(res, threshold).value}"


def cmd_analyze(cfg, args):
    ens, _ = ensemble_of(cfg)
    pdt = pdt_of(cfg, ens.n)
    a = cfg.analysis
    res = atmospheric_run(ens, pdt, list(a.K), a.B, a.seed, args.threads)
    payload = _provenance("analyze", cfg)
    payload["provenance"] = ens.provenance
    payload["results"] = [dict(res[K].to_dict(), classification=classify(res[K], a.threshold).value) for K in sorted(res)]
    io.write_text(_out(cfg, "analysis.json"), io.to_json(payload))
    for K in sorted(res):
        print(_result_line(cfg.channel.family, res[K], a.threshold))
    return EXIT_OK


def cmd_sweep(cfg, args):
    ens, _ = ensemble_of(cfg)
    a = cfg.analysis
    kw = dict(B=a.B, seed=a.seed, threads=args.threads, threshold=a.threshold)
    kind = args.kind
    if kind == "constant-loss":
        sweep = constant_loss_sweep(ens, a.K, **kw)
    elif kind == "postselect":
        sweep = postselection_sweep(ens, pdt_of(cfg, ens.n), a.K, a.thresholds, **kw)
    elif kind == "rytov":
        if not cfg.rytov.grid:
            raise ConfigurationError("rytov sweep needs rytov.grid")
        sweep = rytov_sweep(ens, mapping_of(cfg, ens.n), a.K, cfg.rytov.grid, **kw)
    else:
        alphas = a.alphas or default_beta_grid(a.beta_points)
        betas = a.betas or default_beta_grid(a.beta_points)
        sweep = beta_scan(ens, a.K, alphas, betas, **kw)
    stem = f"sweep_{kind.replace('-', '_')}"
    io.write_text(_out(cfg, stem + ".csv"), io.sweep_to_csv(sweep, _comments(cfg)))
    payload = _provenance("sweep", cfg)
    payload["sweep"] = io.sweep_to_dict(sweep)
    io.write_text(_out(cfg, stem + ".json"), io.to_json(payload))
    _print_table(sweep)
    print(f"wrote {_out(cfg, stem + '.csv')}")
    return EXIT_OK


def _print_table(sweep):
    names = list(sweep.parameter_names)
    head = names + ["K", "e_min", "delta_e", "signif", "verdict"]
    print("  ".join(f"{h:>10}" for h in head))
    for r in sweep.rows():
        cells = [f"{r[p]:>10.4g}" for p in names] + [f"{r['K']:>10d}"]
        if r["error"]:
            cells.append(f"  error: {r['error']}")
        else:
            cells += [f"{r['e_min']:>10.3e}", f"{r['delta_e']:>10.2e}", f"{r['significance']:>10.3g}", f"  {r['classification']}"]
        print("  ".join(cells))


COMMANDS = {
    "discretize": cmd_discretize,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    epilog = "configuration keys (JSON sections; override with --set section.key=value):\n" + config_mod.key_listing()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file, or 'demo' for the packaged demo")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, help="root seed (analysis.seed)")
    common.add_argument("--output", help="output directory")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads (results do not depend on it)")
    common.add_argument("--n", type=int, help="grid resolution (ensemble.n)")

    parser = argparse.ArgumentParser(
        prog="atmosim",
        description="Emulate fluctuating-loss channels from constant-attenuation click data and test nonclassicality.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter
    sub.add_parser("discretize", parents=[common], help="discretize a transmittance model", epilog=epilog, formatter_class=fmt)
    sub.add_parser("simulate", parents=[common], help="simulate and export a click-data ensemble", epilog=epilog, formatter_class=fmt)
    p = sub.add_parser("analyze", parents=[common], help="nonclassicality test of a channel", epilog=epilog, formatter_class=fmt)
    p.add_argument("--data", help="directory of level CSV files (ensemble.data_dir)")
    p = sub.add_parser("sweep", parents=[common], help="parameter sweeps", epilog=epilog, formatter_class=fmt)
    p.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    p = sub.add_parser("calibrate", parents=[common], help="calibrate the source to a mean click number", epilog=epilog, formatter_class=fmt)
    p.add_argument("--target", type=float, help="mean clicks at eta=1 (source.target_mean_clicks)")
    return parser


def _overrides(args):
    out = list(args.set)
    if args.seed is not None:
        out.append(f"analysis.seed={args.seed}")
    if args.output is not None:
        out.append(f"output={json_str(args.output)}")
    if args.n is not None:
        out.append(f"ensemble.n={args.n}")
    if getattr(args, "data", None) is not None:
        out.append(f"ensemble.data_dir={json_str(args.data)}")
    if getattr(args, "target", None) is not None:
        out.append(f"source.target_mean_clicks={args.target}")
    return out


def json_str(s):
    return json.dumps(str(s))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        cfg = config_mod.build(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, args)
    except IncompleteEnsembleError as exc:
        print(f"error: incomplete ensemble: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (IngestionError, SchemaError) as exc:
        print(f"error: ingestion: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except AtmosimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
