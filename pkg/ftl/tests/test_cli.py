import json
from collections import defaultdict
import pytest
from ftl.main import build_parser, load_config, main
from ftl.schemas import HFamily, HSpec, RegionSpec, RunConfig
from ftl.utils import read_csv
from .fixtures import small_config, small_params


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def write_config(tmp_path, cfg: RunConfig):
    path = tmp_path / "config.json"
    path.write_text(cfg.json(indent=2))
    return str(path)


def test_config_round_trip(tmp_path):
    cfg = small_config(tmp_path)
    assert RunConfig.parse_raw(cfg.json()) == cfg


def test_flags_override_file(tmp_path):
    path = write_config(tmp_path, small_config(tmp_path, preset="sphere", seed=1))
    args = build_parser().parse_args(
        ["counterexample", "--config", path, "--seed", "9", "--stages", "4"]
    )
    cfg = load_config(args)
    assert cfg.preset == "sphere"
    assert cfg.seed == 9
    assert cfg.counterexample.stages == 4
    assert cfg.k_max == 4


def test_typemap_sphere(tmp_path):
    code = run(
        tmp_path, "typemap", "--preset", "sphere", "--kmax", "4", "--resolution", "3"
    )
    assert code == 0
    rows = read_csv(tmp_path / "typemap-sphere.csv")
    assert len(rows) == 27
    assert {row["tau_z"] for row in rows} == {"2"}
    summary = json.loads((tmp_path / "typemap-sphere-summary.json").read_text())
    assert summary["tau"] == 2
    commutators = json.loads((tmp_path / "commutators-sphere.json").read_text())
    assert commutators["k_max"] == 4


def test_typemap_egg(tmp_path):
    code = run(
        tmp_path, "typemap", "--preset", "egg-m2", "--kmax", "4", "--resolution", "3"
    )
    assert code == 0
    for row in read_csv(tmp_path / "typemap-egg-m2.csv"):
        on_axis = float(row["x"]) == 0 and float(row["y"]) == 0
        assert row["tau_z"] == ("4" if on_axis else "2")


@pytest.mark.parametrize(
    "argv",
    [
        ["typemap", "--resolution", "0"],
        ["typemap", "--preset", "quartic"],
        ["typemap", "--preset", "ellipsoid"],
        ["counterexample", "--stages", "0"],
        ["region-slice", "--config", "missing.json"],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_type_exceeding_kmax_is_numeric_failure(tmp_path):
    code = run(
        tmp_path, "typemap", "--preset", "egg-m3", "--kmax", "4", "--resolution", "3"
    )
    assert code == 4


def test_region_slice_flat_h_matches_comparable(tmp_path):
    flat = HSpec(family=HFamily.constant)
    cfg = small_config(tmp_path, preset="sphere", region=RegionSpec(h1=flat, h2=flat))
    assert main(["region-slice", "--config", write_config(tmp_path, cfg)]) == 0
    verdicts = defaultdict(dict)
    for row in read_csv(tmp_path / "region-slice-sphere.csv"):
        verdicts[(row["theta"], row["depth"])][row["family"]] = row["verdict"]
    assert len(verdicts) == 12
    for families in verdicts.values():
        assert families["broadened"] == families["comparable"]


def test_region_slice_alpha_is_monotone(tmp_path):
    counts = {}
    for alpha in ("1", "2"):
        out = tmp_path / alpha
        flags = ["--preset", "egg-m2", "--kmax", "4", "--resolution", "3"]
        assert run(out, "region-slice", *flags, "--alpha", alpha) == 0
        rows = read_csv(out / "region-slice-egg-m2.csv")
        counts[alpha] = sum(
            row["verdict"] == "1" for row in rows if row["family"] == "alpha"
        )
    assert counts["2"] >= counts["1"]


def test_counterexample_outputs(tmp_path):
    cfg = small_config(tmp_path, counterexample=small_params(stages=1, base_points=1))
    code = main(["counterexample", "--config", write_config(tmp_path, cfg)])
    assert code == 0
    manifest = json.loads((tmp_path / f"manifest-egg-m2-{cfg.seed}.json").read_text())
    failed = [suite["name"] for suite in manifest["suites"] if not suite["passed"]]
    assert failed == []
    assert "finite-tables" in {suite["name"] for suite in manifest["suites"]}
    assert len(manifest["shell_counts"]) == 129
    assert manifest["tau"] == 4
    assert len(manifest["stages"]) == 1
    zeros = read_csv(tmp_path / f"zeros-egg-m2-{cfg.seed}.csv")
    assert len(zeros) == manifest["stages"][0]["center_count"]
    assert (tmp_path / f"oscillation-egg-m2-{cfg.seed}.csv").exists()


def test_selftest(tmp_path):
    assert run(tmp_path, "selftest", "--seed", "3") == 0
    report = json.loads((tmp_path / "selftest-3.json").read_text())
    assert all(suite["passed"] for suite in report["suites"])
