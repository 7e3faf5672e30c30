import json
import math

import numpy as np
import pytest

from atmosim import io
from atmosim.detector import DetectorConfig
from atmosim.errors import IncompleteEnsembleError, IngestionError, SchemaError
from atmosim.pdt import LogNormalPDT, discretize, point_mass
from atmosim.pipeline import build_ensemble, constant_loss_sweep, export_ensemble, ingest_ensemble
from atmosim.source import SourceConfig, squeezed_vacuum

CFG = DetectorConfig()
SRC = SourceConfig("binomial", n_emitters=20, emission_probability=0.74)


@pytest.fixture
def sampled_dir(tmp_path):
    ens = build_ensemble(SRC, CFG, 100, "sampled", M=10_000, seed=2)
    export_ensemble(ens, tmp_path / "ens")
    return ens, tmp_path / "ens"


def test_round_trip_sampled(sampled_dir):
    ens, d = sampled_dir
    back = ingest_ensemble(d)
    assert back == ens and back.provenance == "ingested"
    assert back.detector == CFG


def test_round_trip_analytic(tmp_path):
    ens = build_ensemble(SRC, CFG, 10)
    export_ensemble(ens, tmp_path)
    back = ingest_ensemble(tmp_path)
    assert back == ens and not back.has_counts


def test_missing_level_names_eta(sampled_dir):
    _, d = sampled_dir
    (d / "level_050.csv").unlink()
    with pytest.raises(IncompleteEnsembleError, match="eta = 0.50"):
        ingest_ensemble(d)


def test_mismatched_bins(sampled_dir, tmp_path):
    _, d = sampled_dir
    other = build_ensemble(SRC, DetectorConfig(bins=4), 100)
    odd = tmp_path / "odd"
    export_ensemble(other, odd)
    (d / "level_007.csv").write_text((odd / "level_007.csv").read_text())
    with pytest.raises(SchemaError):
        ingest_ensemble(d)


def _corrupt(path, old, new):
    text = path.read_text()
    assert old in text
    path.write_text(text.replace(old, new, 1))


def test_bad_number_reports_line(sampled_dir):
    _, d = sampled_dir
    f = d / "level_003.csv"
    lines = f.read_text().splitlines()
    idx = next(i for i, line in enumerate(lines) if line.startswith("2,"))
    lines[idx] = "2,12,abc"
    f.write_text("\n".join(lines) + "\n")
    with pytest.raises(IngestionError, match=rf"level_003.csv:{idx + 1}:"):
        ingest_ensemble(d)


def test_wrong_header(sampled_dir):
    _, d = sampled_dir
    _corrupt(d / "level_010.csv", "k,count,probability", "k,n,p")
    with pytest.raises(IngestionError, match="header"):
        ingest_ensemble(d)


def test_count_total_must_match(sampled_dir):
    _, d = sampled_dir
    _corrupt(d / "level_010.csv", "# M: 10000", "# M: 9999")
    with pytest.raises(IngestionError, match="counts sum"):
        ingest_ensemble(d)


def test_duplicate_level(sampled_dir):
    _, d = sampled_dir
    (d / "copy.csv").write_text((d / "level_010.csv").read_text())
    with pytest.raises(IngestionError, match="duplicate"):
        ingest_ensemble(d)


def test_label_grid_mismatch(sampled_dir):
    _, d = sampled_dir
    _corrupt(d / "level_010.csv", "# eta: 10/100", "# eta: 1/10")
    with pytest.raises(IngestionError, match="grid"):
        ingest_ensemble(d)


def test_empty_directory(tmp_path):
    with pytest.raises(IngestionError):
        ingest_ensemble(tmp_path)


def test_pdt_csv_round_trip(tmp_path):
    pdt = discretize(LogNormalPDT.from_variance(-1.75, 0.55), 100)
    f = tmp_path / "pdt.csv"
    io.write_text(f, io.pdt_to_csv(pdt, ["note: x"]))
    text = f.read_bytes()
    assert b"\r" not in text and text.count(b"\n") == 103
    back = io.read_pdt_csv(f)
    np.testing.assert_allclose(back.weights, pdt.weights, rtol=0, atol=1e-16)


def test_pnd_csv():
    text = io.pnd_to_csv(squeezed_vacuum(0.5))
    assert text.startswith("n,p\n0,")


def test_density_csv(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("eta,value\n0.0,1.0\n1.0,1.0\n")
    tab = io.read_density_csv(f)
    assert tab.eta == (0.0, 1.0)


def test_sweep_csv_and_json():
    ens = build_ensemble(SRC, CFG, 4)
    sweep = constant_loss_sweep(ens, (2, 8))
    text = io.sweep_to_csv(sweep)
    header = text.splitlines()[0]
    assert header == "eta,K,e_min,delta_e,significance,classification,error"
    assert len(text.splitlines()) == 1 + 10
    payload = json.loads(io.to_json(io.sweep_to_dict(sweep)))
    assert payload["rows"][-1]["significance"] == "-inf"


def test_json_non_finite_values():
    assert json.loads(io.to_json({"a": math.nan, "b": np.float64(1.5)})) == {"a": None, "b": 1.5}
