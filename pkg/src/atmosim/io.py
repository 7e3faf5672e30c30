"""CSV and JSON serialization.

Schemas (UTF-8, LF line endings, header row first):

* PDT values: ``eta,value``
* photon-number distribution: ``n,p``
* click statistics: ``k,count,probability`` preceded by ``# key: value``
  metadata lines (``N``, ``M``, ``eta`` as ``j/n``, optional ``efficiency``
  and ``dark``). ``count`` is empty for probability-only statistics.

Floats are written with ``repr`` so a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import re
from pathlib import Path

import numpy as np

from .detector import ClickStatistics, DetectorConfig
from .errors import IncompleteEnsembleError, IngestionError, SchemaError
from .pdt import DiscretePDT, TabulatedPDT

CLICK_HEADER = ["k", "count", "probability"]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_text(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv_text(header, rows, comments=()) -> str:
    buf = _io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def pdt_to_csv(pdt: DiscretePDT, comments=()) -> str:
    return _csv_text(["eta", "value"], zip(pdt.etas, pdt.weights), comments)


def pnd_to_csv(pnd, comments=()) -> str:
    return _csv_text(["n", "p"], enumerate(pnd.probs), comments)


def _data_lines(path):
    """Yield ``(line_number, text)`` for non-comment lines, and the comment metadata."""
    meta, lines = {}, []
    try:
        with open(path, encoding="utf-8") as fh:
            for no, raw in enumerate(fh, 1):
                s = raw.rstrip("\n").rstrip("\r")
                if s.startswith("#"):
                    key, sep, val = s[1:].partition(":")
                    if sep:
                        meta[key.strip().lower()] = (val.strip(), no)
                elif s.strip():
                    lines.append((no, s))
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"{path}: cannot read ({exc})") from exc
    return meta, lines


def _parse_float(text, path, no, col):
    try:
        v = float(text)
    except ValueError:
        raise IngestionError(f"{path}:{no}: column {col!r} is not a number: {text!r}") from None
    return v


def read_two_column(path, header):
    """Rows of a two-column numeric CSV with the given header."""
    _, lines = _data_lines(path)
    if not lines:
        raise IngestionError(f"{path}: empty file")
    no, first = lines[0]
    if [h.strip() for h in first.split(",")] != header:
        raise IngestionError(f"{path}:{no}: expected header {','.join(header)!r}, got {first!r}")
    out = []
    for no, s in lines[1:]:
        parts = s.split(",")
        if len(parts) != 2:
            raise IngestionError(f"{path}:{no}: expected 2 fields, got {len(parts)}")
        out.append(tuple(_parse_float(p, path, no, h) for p, h in zip(parts, header)))
    return np.array(out, dtype=float).reshape(-1, 2)


def read_pdt_csv(path) -> DiscretePDT:
    """Discrete PDT from an ``eta,value`` file on a complete ``j/n`` grid."""
    a = read_two_column(path, ["eta", "value"])
    n = a.shape[0] - 1
    if n < 1 or not np.allclose(a[:, 0], np.arange(n + 1) / n, rtol=0, atol=1e-9):
        raise IngestionError(f"{path}: eta column must be the grid j/n, j = 0..n")
    try:
        return DiscretePDT.from_unnormalized(a[:, 1])
    except ValueError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def read_density_csv(path) -> TabulatedPDT:
    a = read_two_column(path, ["eta", "value"])
    try:
        return TabulatedPDT(tuple(a[:, 0]), tuple(a[:, 1]))
    except ValueError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def click_statistics_to_csv(cs: ClickStatistics, label: str, cfg: DetectorConfig | None = None, extra=()) -> str:
    comments = list(extra) + [f"N: {cs.N}", f"M: {cs.M if cs.M is not None else 'none'}", f"eta: {label}"]
    if cfg is not None:
        comments += [f"efficiency: {_fmt(cfg.efficiency)}", f"dark: {_fmt(cfg.dark)}"]
    counts = cs.counts if cs.counts is not None else [""] * (cs.N + 1)
    rows = [(k, c, p) for k, (c, p) in enumerate(zip(counts, cs.probabilities))]
    return _csv_text(CLICK_HEADER, rows, comments)


def _meta_int(meta, key, path):
    if key not in meta:
        raise IngestionError(f"{path}: missing metadata line '# {key.upper()}: ...'")
    val, no = meta[key]
    try:
        return int(val)
    except ValueError:
        raise IngestionError(f"{path}:{no}: metadata {key!r} must be an integer, got {val!r}") from None


_LABEL = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")


def read_click_csv(path):
    """Parse one level file; returns ``((j, n), ClickStatistics, metadata)``."""
    meta, lines = _data_lines(path)
    N = _meta_int(meta, "n", path)
    if "eta" not in meta:
        raise IngestionError(f"{path}: missing metadata line '# eta: j/n'")
    label, lno = meta["eta"]
    m = _LABEL.match(label)
    if not m or int(m.group(2)) == 0 or int(m.group(1)) > int(m.group(2)):
        raise IngestionError(f"{path}:{lno}: attenuation label must read 'j/n' with 0 <= j <= n, got {label!r}")
    j, n = int(m.group(1)), int(m.group(2))
    M_text, M_no = meta.get("m", ("none", None))
    if not lines:
        raise IngestionError(f"{path}: no header row")
    no, first = lines[0]
    if [h.strip() for h in first.split(",")] != CLICK_HEADER:
        raise IngestionError(f"{path}:{no}: expected header 'k,count,probability', got {first!r}")
    rows = lines[1:]
    if len(rows) != N + 1:
        raise IngestionError(f"{path}: header declares N={N} but there are {len(rows)} data rows (need N+1)")
    counts, probs = [], []
    for expect_k, (no, s) in enumerate(rows):
        parts = s.split(",")
        if len(parts) != 3:
            raise IngestionError(f"{path}:{no}: expected 3 fields, got {len(parts)}")
        k_text, c_text, p_text = (p.strip() for p in parts)
        if k_text != str(expect_k):
            raise IngestionError(f"{path}:{no}: expected k={expect_k}, got {k_text!r}")
        if c_text:
            if not c_text.isdigit():
                raise IngestionError(f"{path}:{no}: count must be a nonnegative integer, got {c_text!r}")
            counts.append(int(c_text))
        p = _parse_float(p_text, path, no, "probability")
        if not (0 <= p <= 1):
            raise IngestionError(f"{path}:{no}: probability outside [0, 1]: {p_text}")
        probs.append(p)
    if counts and len(counts) != len(rows):
        raise IngestionError(f"{path}: count column is filled on some rows only")
    try:
        if counts:
            total = sum(counts)
            if M_text != "none" and int(M_text) != total:
                raise IngestionError(f"{path}:{M_no}: metadata M={M_text} but counts sum to {total}")
            cs = ClickStatistics.from_counts(counts)
            if np.max(np.abs(cs.probabilities - np.array(probs))) > 1e-9:
                raise IngestionError(f"{path}: probability column disagrees with count/M")
        else:
            cs = ClickStatistics(probs)
    except (SchemaError, ValueError) as exc:
        if isinstance(exc, IngestionError):
            raise
        raise IngestionError(f"{path}: {exc}") from exc
    return (j, n), cs, meta


def write_ensemble(ensemble, directory, comments=()):
    """Write one ``level_J.csv`` file per grid point (zero-padded ``J``)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    width = len(str(ensemble.n))
    paths = []
    for j, cs in enumerate(ensemble.stats):
        p = d / f"level_{j:0{width}d}.csv"
        write_text(p, click_statistics_to_csv(cs, f"{j}/{ensemble.n}", ensemble.detector, comments))
        paths.append(p)
    return paths


def read_ensemble(directory):
    """Validated ensemble from a directory of level files (provenance ``ingested``)."""
    from .pipeline import ChannelEnsemble

    d = Path(directory)
    if not d.is_dir():
        raise IngestionError(f"{d}: not a directory")
    files = sorted(d.glob("*.csv"))
    if not files:
        raise IngestionError(f"{d}: no CSV files")
    levels = {}
    grid = None
    N = None
    detector_meta = None
    for f in files:
        (j, n), cs, meta = read_click_csv(f)
        if grid is None:
            grid = n
        elif n != grid:
            raise IngestionError(f"{f}: label {j}/{n} is not on the 1/{grid} grid of the other files")
        if N is None:
            N, first = cs.N, f
        elif cs.N != N:
            raise SchemaError(f"{f}: N={cs.N} but {first.name} has N={N}")
        if j in levels:
            raise IngestionError(f"{f}: duplicate attenuation level {j}/{n} (also in {levels[j][0].name})")
        levels[j] = (f, cs)
        if detector_meta is None and "efficiency" in meta:
            detector_meta = meta
    missing = [j for j in range(grid + 1) if j not in levels]
    if missing:
        etas = ", ".join(f"{j / grid:.2f}" for j in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        raise IncompleteEnsembleError(f"{d}: no click statistics for eta = {etas}{more}")
    Ms = {cs.M for _, cs in levels.values()}
    if len(Ms) > 1 and None in Ms:
        raise IngestionError(f"{d}: some levels carry counts and others do not")
    cfg = DetectorConfig(bins=N)
    if detector_meta is not None:
        try:
            cfg = DetectorConfig(N, float(detector_meta["efficiency"][0]), float(detector_meta.get("dark", ("0", 0))[0]))
        except ValueError as exc:
            raise IngestionError(f"{d}: bad detector metadata ({exc})") from exc
    stats = tuple(levels[j][1] for j in range(grid + 1))
    return ChannelEnsemble(stats, cfg, "ingested", {"source_dir": str(d)})


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def to_json(obj) -> str:
    """Deterministic JSON (sorted keys, non-finite floats as strings/null)."""
    return json.dumps(_finite(obj), sort_keys=True, indent=2, default=_json_default, allow_nan=False) + "\n"


def sweep_to_csv(sweep, comments=()) -> str:
    rows = sweep.rows()
    header = list(sweep.parameter_names) + ["K", "e_min", "delta_e", "significance", "classification", "error"]
    return _csv_text(header, ([r[h] for h in header] for r in rows), comments)


def sweep_to_dict(sweep) -> dict:
    return {
        "kind": sweep.kind,
        "parameters": list(sweep.parameter_names),
        "info": sweep.info,
        "rows": sweep.rows(),
    }
