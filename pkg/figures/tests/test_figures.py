"""Figure-package tests: bundle validation, band conventions, bit-stable
extraction, and end-to-end rendering of CLI-produced CSV bundles.

The bundles are generated by driving the srw CLI as a subprocess (the
only interface this package is allowed to consume); solver settings are
scaled down so the whole suite stays desk-fast.
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from srw_figures import (
    EXPERIMENT_FIGURES,
    FigureError,
    FigureSpec,
    SchemaMismatch,
    extract_segments,
    extract_series,
    load_bundle,
    render,
)
from srw_figures.cli import main

BUNDLE_ARGS = {
    "hypercube-curve": ["--trials", "5", "--d", "10", "--n", "20",
                        "--kstars", "2,4,7,10", "--eps", "0.1"],
    "disk-annulus-error": ["--trials", "3", "--ns", "25,50"],
    "gaussians-curve": ["--trials", "3", "--d", "8", "--dof", "2",
                        "--n", "16", "--eps", "1e-3"],
    "noise-robustness": ["--trials", "3", "--d", "8", "--dof", "2", "--n", "16",
                         "--k", "2", "--eps", "1e-2", "--sigmas", "0.1,1"],
    "plan-segments": ["--setup", "dirac", "--d", "2"],
}


@pytest.fixture(scope="session")
def bundles_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("bundles")
    for name, args in BUNDLE_ARGS.items():
        subprocess.run(
            [sys.executable, "-m", "srw.cli", "exp", name, "--out-dir", str(out), *args],
            check=True, capture_output=True, text=True,
        )
    return out


def spec_for(name: str, in_dir: Path, out_dir: Path) -> FigureSpec:
    return FigureSpec(
        experiment=name,
        csv_path=in_dir / f"{name}.csv",
        schema_path=in_dir / f"{name}.schema.json",
        out_path=out_dir / f"{name}.pdf",
    )


def copy_bundle(name: str, src: Path, dst: Path) -> None:
    for suffix in (".csv", ".schema.json"):
        shutil.copy(src / f"{name}{suffix}", dst / f"{name}{suffix}")


@pytest.mark.parametrize("name", sorted(BUNDLE_ARGS))
def test_renders_vector_figure(name, bundles_dir, tmp_path):
    out_path = render(spec_for(name, bundles_dir, tmp_path))
    assert out_path == tmp_path / f"{name}.pdf"
    payload = out_path.read_bytes()
    assert payload.startswith(b"%PDF")
    assert len(payload) > 1000


def test_cli_renders_and_prints_path(bundles_dir, tmp_path, capsys):
    code = main(["disk-annulus-error", "--in", str(bundles_dir), "--out", str(tmp_path)])
    out = capsys.readouterr().out.strip()
    assert code == 0
    assert out == str(tmp_path / "disk-annulus-error.pdf")
    assert (tmp_path / "disk-annulus-error.pdf").exists()


def test_console_script_end_to_end(bundles_dir, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "srw_figures.cli", "plan-segments",
         "--in", str(bundles_dir), "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "plan-segments.pdf").exists()


def test_band_conventions_match_captions():
    minmax = (("min", "max"),)
    quantiles = (("q10", "q90"), ("q25", "q75"))
    assert EXPERIMENT_FIGURES["hypercube-curve"].bands == minmax
    assert EXPERIMENT_FIGURES["disk-annulus-curve"].bands == minmax
    assert EXPERIMENT_FIGURES["timing"].bands == minmax
    assert EXPERIMENT_FIGURES["hypercube-error"].bands == quantiles
    assert EXPERIMENT_FIGURES["hypercube-subspace"].bands == quantiles
    assert EXPERIMENT_FIGURES["disk-annulus-error"].bands == quantiles
    assert EXPERIMENT_FIGURES["gaussians-curve"].bands == quantiles + minmax
    assert EXPERIMENT_FIGURES["noise-robustness"].bands == minmax + (("q10", "q90"),)


def test_hypercube_curve_extracts_four_minmax_series(bundles_dir):
    name = "hypercube-curve"
    bundle = load_bundle(bundles_dir / f"{name}.csv", bundles_dir / f"{name}.schema.json")
    series = extract_series(bundle, EXPERIMENT_FIGURES[name])
    assert [s.label for s in series] == ["kstar=2", "kstar=4", "kstar=7", "kstar=10"]
    for s in series:
        assert list(s.x) == list(range(1, 11))
        assert set(s.bands) == {("min", "max")}
        lo, hi = s.bands[("min", "max")]
        assert np.all(lo <= s.center + 1e-12)
        assert np.all(s.center <= hi + 1e-12)


def test_quantile_bands_are_nested(bundles_dir):
    name = "disk-annulus-error"
    bundle = load_bundle(bundles_dir / f"{name}.csv", bundles_dir / f"{name}.schema.json")
    (series,) = extract_series(bundle, EXPERIMENT_FIGURES[name])
    q10, q90 = series.bands[("q10", "q90")]
    q25, q75 = series.bands[("q25", "q75")]
    assert np.all(q10 <= q25) and np.all(q25 <= q75) and np.all(q75 <= q90)


def test_noise_robustness_extracts_both_error_series(bundles_dir):
    name = "noise-robustness"
    bundle = load_bundle(bundles_dir / f"{name}.csv", bundles_dir / f"{name}.schema.json")
    series = extract_series(bundle, EXPERIMENT_FIGURES[name])
    assert [s.label for s in series] == ["srw_rel_error", "w2_rel_error"]
    for s in series:
        assert list(s.x) == [0.1, 1.0]


def test_extraction_is_bit_stable(bundles_dir):
    name = "gaussians-curve"
    paths = (bundles_dir / f"{name}.csv", bundles_dir / f"{name}.schema.json")

    def snapshot():
        series = extract_series(load_bundle(*paths), EXPERIMENT_FIGURES[name])
        parts = []
        for s in series:
            parts.append(s.x.tobytes())
            parts.append(s.center.tobytes())
            for pair in s.bands:
                lo, hi = s.bands[pair]
                parts.append(lo.tobytes())
                parts.append(hi.tobytes())
        return b"".join(parts)

    assert snapshot() == snapshot()


def test_extraction_is_bit_stable_across_processes(bundles_dir):
    name = "hypercube-curve"
    code = (
        "import hashlib, sys\n"
        "from srw_figures import EXPERIMENT_FIGURES, extract_series, load_bundle\n"
        f"bundle = load_bundle({str(bundles_dir / (name + '.csv'))!r}, "
        f"{str(bundles_dir / (name + '.schema.json'))!r})\n"
        f"series = extract_series(bundle, EXPERIMENT_FIGURES[{name!r}])\n"
        "h = hashlib.sha256()\n"
        "for s in series:\n"
        "    h.update(s.x.tobytes()); h.update(s.center.tobytes())\n"
        "    for pair in sorted(s.bands):\n"
        "        lo, hi = s.bands[pair]\n"
        "        h.update(lo.tobytes()); h.update(hi.tobytes())\n"
        "print(h.hexdigest())\n"
    )
    digests = {
        subprocess.run([sys.executable, "-c", code], check=True,
                       capture_output=True, text=True).stdout.strip()
        for _ in range(2)
    }
    assert len(digests) == 1


def test_plan_segments_dirac_single_segment(bundles_dir):
    name = "plan-segments"
    bundle = load_bundle(bundles_dir / f"{name}.csv", bundles_dir / f"{name}.schema.json")
    segments = extract_segments(bundle)
    assert len(segments["mass"]) == 1
    assert segments["mass"][0] == pytest.approx(1.0, abs=1e-12)
    start = (segments["x0"][0], segments["y0"][0])
    end = (segments["x1"][0], segments["y1"][0])
    assert start != end


def test_schema_renamed_column_names_offender(bundles_dir, tmp_path):
    src = "hypercube-curve"
    copy_bundle(src, bundles_dir, tmp_path)
    schema_path = tmp_path / f"{src}.schema.json"
    schema = json.loads(schema_path.read_text())
    schema["columns"][schema["columns"].index("value_squared")] = "value"
    schema_path.write_text(json.dumps(schema))
    with pytest.raises(SchemaMismatch, match="'value_squared'.*'value'|'value'.*'value_squared'"):
        load_bundle(tmp_path / f"{src}.csv", schema_path)


def test_csv_extra_column_names_offender(bundles_dir, tmp_path):
    src = "disk-annulus-error"
    copy_bundle(src, bundles_dir, tmp_path)
    csv_path = tmp_path / f"{src}.csv"
    lines = csv_path.read_text().splitlines()
    lines[0] = lines[0] + ",surprise"
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaMismatch, match="'surprise'"):
        load_bundle(csv_path, tmp_path / f"{src}.schema.json")


def test_csv_missing_column_names_offender(bundles_dir, tmp_path):
    src = "disk-annulus-error"
    copy_bundle(src, bundles_dir, tmp_path)
    csv_path = tmp_path / f"{src}.csv"
    lines = csv_path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[-1] == "abs_error"
    lines[0] = ",".join(header[:-1])
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaMismatch, match="'abs_error'"):
        load_bundle(csv_path, tmp_path / f"{src}.schema.json")


def test_cli_schema_mismatch_exit_2_names_column(bundles_dir, tmp_path, capsys):
    src = "noise-robustness"
    copy_bundle(src, bundles_dir, tmp_path)
    schema_path = tmp_path / f"{src}.schema.json"
    schema = json.loads(schema_path.read_text())
    schema["columns"][schema["columns"].index("srw_rel_error")] = "srw_error"
    schema_path.write_text(json.dumps(schema))
    code = main([src, "--in", str(tmp_path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert err.startswith("error:")
    assert "srw_rel_error" in err or "srw_error" in err
    assert not (tmp_path / f"{src}.pdf").exists()


def test_empty_aggregate_rows_error_not_empty_plot(bundles_dir, tmp_path, capsys):
    src = "disk-annulus-error"
    copy_bundle(src, bundles_dir, tmp_path)
    csv_path = tmp_path / f"{src}.csv"
    lines = csv_path.read_text().splitlines()
    kept = [lines[0]] + [l for l in lines[1:] if l.startswith("trial,")]
    csv_path.write_text("\n".join(kept) + "\n")
    code = main([src, "--in", str(tmp_path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert "no aggregate rows" in err
    assert not (tmp_path / f"{src}.pdf").exists()


def test_schema_for_wrong_experiment_rejected(bundles_dir, tmp_path):
    copy_bundle("gaussians-curve", bundles_dir, tmp_path)
    (tmp_path / "timing.csv").write_bytes((tmp_path / "gaussians-curve.csv").read_bytes())
    (tmp_path / "timing.schema.json").write_bytes(
        (tmp_path / "gaussians-curve.schema.json").read_bytes()
    )
    with pytest.raises(FigureError, match="schema is for experiment 'gaussians-curve'"):
        render(spec_for("timing", tmp_path, tmp_path))


def test_missing_bundle_exit_2(tmp_path, capsys):
    code = main(["timing", "--in", str(tmp_path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert err.startswith("error:")


def test_unknown_experiment_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["movie-scripts", "--in", str(tmp_path), "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_rerender_produces_identical_series(bundles_dir, tmp_path):
    name = "noise-robustness"
    spec = spec_for(name, bundles_dir, tmp_path)
    bundle = load_bundle(spec.csv_path, spec.schema_path)
    before = extract_series(bundle, EXPERIMENT_FIGURES[name])
    render(spec)
    render(spec)
    after = extract_series(
        load_bundle(spec.csv_path, spec.schema_path), EXPERIMENT_FIGURES[name]
    )
    assert len(before) == len(after)
    for a, b in zip(before, after):
        assert a.label == b.label
        assert a.x.tobytes() == b.x.tobytes()
        assert a.center.tobytes() == b.center.tobytes()
        for pair in a.bands:
            assert a.bands[pair][0].tobytes() == b.bands[pair][0].tobytes()
            assert a.bands[pair][1].tobytes() == b.bands[pair][1].tobytes()
