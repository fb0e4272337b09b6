import json
import math
from pathlib import Path

import numpy as np
import pytest

from toruscoal.cli import main
from toruscoal.experiments import (
    ConfigError,
    ExperimentConfig,
    cmd_qq,
    cmd_spectrum,
    emit_plots,
    run_spectrum,
    summary_without_timing,
)
from toruscoal.spatial import replay_jsonl
from toruscoal.torus import TorusSpec


def small_cfg(**kw):
    base = dict(side_length=9, mechanisms=("bs",), layout="grid3x3-close",
                replicates=3, seed=7)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation_messages():
    with pytest.raises(ConfigError, match="side-length"):
        small_cfg(side_length=10)
    with pytest.raises(ConfigError, match="side-length"):
        small_cfg(side_length=1)
    with pytest.raises(ConfigError, match="mechanism"):
        small_cfg(mechanisms=("warp",))
    with pytest.raises(ConfigError, match="layout"):
        small_cfg(layout="hexagon")
    with pytest.raises(ConfigError, match="replicates"):
        small_cfg(replicates=0)
    with pytest.raises(ConfigError, match="threshold"):
        small_cfg(threshold=1e6)
    with pytest.raises(ConfigError, match="workers"):
        small_cfg(workers=0)
    with pytest.raises(ConfigError, match="sites"):
        small_cfg(layout="explicit", sites=None)
    with pytest.raises(ConfigError, match="sites"):
        small_cfg(layout="explicit", sites=((99, 0),))
    with pytest.raises(ConfigError, match="mutation-rate"):
        small_cfg(mutation_rate=-1.0)


def test_layouts():
    cfg = ExperimentConfig(side_length=99, mechanisms=("crw",), layout="grid3x3-far")
    sites = cfg.layout_sites()
    torus = TorusSpec(49)
    assert len(sites) == 9
    step = 33
    for i in range(9):
        for j in range(i + 1, 9):
            assert torus.distance(sites[i], sites[j]) >= step
    close = ExperimentConfig(side_length=99, mechanisms=("crw",),
                             layout="grid3x3-close").layout_sites()
    assert set(close) == {(i, j) for i in range(3) for j in range(3)}
    same = ExperimentConfig(side_length=99, mechanisms=("crw",),
                            layout="same-site").layout_sites()
    assert same == ((0, 0),) * 9
    expl = ExperimentConfig(side_length=9, mechanisms=("crw",), layout="explicit",
                            sites=((0, 0), (1, 2))).layout_sites()
    assert expl == ((0, 0), (1, 2))


def test_default_mutation_rate_used():
    cfg = small_cfg()
    assert cfg.effective_mutation_rate() == pytest.approx(
        math.pi / (9**2 * math.log(9))
    )
    assert small_cfg(mutation_rate=0.5).effective_mutation_rate() == 0.5


def test_mechanisms_from_string():
    cfg = small_cfg(mechanisms="bs, crw ,kingman-reference")
    assert cfg.mechanisms == ("bs", "crw", "kingman-reference")


def test_spectrum_output_files(tmp_path):
    cfg = small_cfg(mechanisms=("bs", "kingman-reference"), out_dir=str(tmp_path))
    path = cmd_spectrum(cfg)
    text = path.read_text().splitlines()
    assert text[0].startswith("# config ")
    assert text[1] == "mechanism,k,mean_a_k,stderr_a_k,replicates"
    # 2 mechanisms + ewens reference, 9 rows each
    assert len(text) == 2 + 3 * 9
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config_hash"] == cfg.hash()
    assert "bs" in summary["spectrum"]
    assert "timing" in summary
    ewens = summary["ewens_reference"]
    assert (np.arange(1, 10) * np.array(ewens)).sum() == pytest.approx(9.0)


def test_spectrum_determinism_across_workers(tmp_path):
    blobs = []
    summaries = []
    for tag, workers in (("a", 1), ("b", 2), ("c", 1)):
        cfg = small_cfg(mechanisms=("bs", "crw"), out_dir=str(tmp_path / tag),
                        workers=workers, replicates=4)
        path = cmd_spectrum(cfg)
        blobs.append(path.read_bytes())
        summaries.append(summary_without_timing(path.parent / "summary.json"))
    assert blobs[0] == blobs[1] == blobs[2]
    assert summaries[0] == summaries[1] == summaries[2]


def test_qq_output(tmp_path):
    cfg = small_cfg(mechanisms=("bs", "kingman-reference"), out_dir=str(tmp_path),
                    replicates=5)
    path = cmd_qq(cfg)
    lines = path.read_text().splitlines()
    assert lines[1] == "quantile_index,sample_a,sample_b"
    assert len(lines) == 2 + 5
    with pytest.raises(ConfigError, match="mechanism"):
        from toruscoal.experiments import run_qq
        run_qq(small_cfg(mechanisms=("bs",)))


def test_hybrid_handoff_in_summary(tmp_path):
    cfg = small_cfg(threshold=3.0, out_dir=str(tmp_path), replicates=5)
    cmd_spectrum(cfg)
    summary = json.loads((tmp_path / "summary.json").read_text())
    h = summary["spectrum"]["bs"]["handoff"]
    assert 0 <= h["fraction_used"] <= 1
    assert h["mean_blocks"] >= 0


def test_events_jsonl(tmp_path):
    cfg = small_cfg(events=True, out_dir=str(tmp_path), replicates=2)
    cmd_spectrum(cfg)
    path = tmp_path / "events_bs.jsonl"
    assert path.exists()
    final = replay_jsonl(path)
    assert final == ()  # the killing scheme removes every line


def test_plots(tmp_path):
    cfg = small_cfg(mechanisms=("bs", "kingman-reference"),
                    out_dir=str(tmp_path), replicates=3)
    spec_csv = cmd_spectrum(cfg)
    qq_csv = cmd_qq(small_cfg(mechanisms=("bs", "kingman-reference"),
                              out_dir=str(tmp_path / "qq"), replicates=4))
    written = emit_plots([spec_csv, qq_csv], tmp_path / "plots")
    assert len(written) == 2
    for svg in written:
        assert svg.suffix == ".svg"
        assert svg.stat().st_size > 500


def test_plot_malformed_csv(tmp_path):
    bad = tmp_path / "spectrum.csv"
    bad.write_text("mechanism,k,mean_a_k,stderr_a_k,replicates\nbs,notanint,1,0,3\n")
    with pytest.raises(ValueError, match="line 2"):
        emit_plots([bad], tmp_path)
    empty = tmp_path / "empty.csv"
    empty.write_text("# config abc\n")
    with pytest.raises(ValueError, match="no data"):
        emit_plots([empty], tmp_path)


def test_run_spectrum_reference_mechanism():
    cfg = small_cfg(mechanisms=("kingman-reference",), replicates=6)
    result = run_spectrum(cfg)
    arr = result.spectra["kingman-reference"]
    assert arr.shape == (6, 9)
    assert ((np.arange(1, 10) * arr).sum(axis=1) == 9).all()


# -- CLI ---------------------------------------------------------------------


def test_cli_spectrum_and_plot(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["spectrum", "--side-length", "9", "--layout", "grid3x3-close",
               "--mechanism", "bs", "--replicates", "2", "--seed", "3",
               "--out", str(out)])
    assert rc == 0
    assert (out / "spectrum.csv").exists()
    rc = main(["plot", "--input", str(out / "spectrum.csv"), "--out", str(out)])
    assert rc == 0
    assert (out / "spectrum.svg").exists()


def test_cli_config_errors(tmp_path, capsys):
    rc = main(["spectrum", "--side-length", "10", "--mechanism", "bs",
               "--out", str(tmp_path)])
    assert rc == 2
    assert "side-length" in capsys.readouterr().err
    rc = main(["spectrum", "--side-length", "9", "--mechanism", "bogus",
               "--out", str(tmp_path)])
    assert rc == 2
    rc = main(["spectrum", "--mechanism", "bs", "--out", str(tmp_path)])
    assert rc == 2
    rc = main(["qq", "--side-length", "9", "--layout", "grid3x3-close",
               "--mechanism", "bs,kingman-reference", "--threshold", "2.0",
               "--out", str(tmp_path)])
    assert rc == 2


def test_cli_config_file(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({
        "side_length": 9,
        "layout": "grid3x3-close",
        "mechanisms": ["bs"],
        "replicates": 2,
        "seed": 11,
    }))
    out = tmp_path / "out"
    rc = main(["spectrum", "--config", str(cfg_file), "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["seed"] == 11
    # explicit flag overrides the file
    out2 = tmp_path / "out2"
    rc = main(["spectrum", "--config", str(cfg_file), "--seed", "12",
               "--out", str(out2)])
    assert rc == 0
    assert json.loads((out2 / "summary.json").read_text())["config"]["seed"] == 12
    cfg_file.write_text(json.dumps({"side_length": 9, "mechanisms": ["bs"],
                                    "bogus_field": 1}))
    rc = main(["spectrum", "--config", str(cfg_file), "--out", str(tmp_path)])
    assert rc == 2


def test_cli_qq(tmp_path):
    out = tmp_path / "qq"
    rc = main(["qq", "--side-length", "9", "--layout", "grid3x3-close",
               "--mechanism", "bs,kingman-reference", "--replicates", "3",
               "--seed", "5", "--out", str(out)])
    assert rc == 0
    assert (out / "qq.csv").exists()
