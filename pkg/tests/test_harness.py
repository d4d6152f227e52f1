"""Configuration, rate fits, report emission, the experiment registry and the CLI."""
import csv
import io
import json
import math

import numpy as np
import pytest

from bridgelab import DomainError, UsageError
from bridgelab.bridge import heat_kernel_1d
from bridgelab.geometry import make_chart
from bridgelab.harness import (
    REGISTRY,
    ExperimentReport,
    build_config,
    emit,
    make_config,
    rate_fit,
    run,
    to_csv,
    to_json,
)
from bridgelab.harness.cli import main
from bridgelab.io import load_kernel
from bridgelab.measures import Grid

LADDER = [0.4, 0.2, 0.1, 0.05]

# a small Monte Carlo config that still exercises seeds
SMALL_MC = {"epsilons": [0.4, 0.2, 0.1], "trajectories": 2000}


# rate fits

def test_rate_fit_exact_square():
    fit = rate_fit([(e, e**2) for e in LADDER])
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


def test_rate_fit_intercept():
    fit = rate_fit([(e, 3 * e**2) for e in LADDER])
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert [p[0] for p in fit.points] == pytest.approx(np.log(LADDER).tolist())


def test_rate_fit_errors_and_noise_floor():
    with pytest.raises(DomainError):
        rate_fit([(0.4, 1.0), (0.2, 0.5)])
    with pytest.raises(DomainError):
        rate_fit([(0.4, 1.0), (0.2, 0.0), (0.1, 0.1)])
    fit = rate_fit([(0.4, 1e-9), (0.2, 2e-9), (0.1, 0.0)], noise_floor=1e-7)
    assert fit.status == "below noise floor" and math.isnan(fit.slope)


def test_rate_fit_r_squared_in_unit_interval():
    rng = np.random.default_rng(0)
    fit = rate_fit([(e, e**2 * math.exp(rng.normal(0, 0.3))) for e in LADDER])
    assert 0.0 <= fit.r_squared <= 1.0


# configuration

def test_malformed_ladders():
    with pytest.raises(UsageError):
        make_config("symrelent", {"epsilons": [0.05, 0.1, 0.2, 0.4]})
    with pytest.raises(UsageError):
        make_config("symrelent", {"epsilons": [0.4, 0.2]})
    with pytest.raises(UsageError):
        make_config("symrelent", {"epsilons": [0.4, 0.0, -0.1]})
    with pytest.raises(UsageError):
        make_config("symrelent", {"epsilons": [0.4, 0.4, 0.1]})


def test_config_validation():
    with pytest.raises(UsageError):
        make_config("no-such-experiment")
    with pytest.raises(UsageError):
        make_config("symrelent", {"bogus": 1})
    with pytest.raises(UsageError):
        make_config("moments", {"step_divisor": 10})
    with pytest.raises(UsageError):
        make_config("moments", {"output": {"format": "xml"}})


def test_config_merges_nested_overrides():
    cfg = make_config("barycentric", {"chart": {"nodes": 256}, "tolerances": {"max_rel_error_at_smallest": 0.2}})
    assert cfg.chart["potential"] == "quartic1d" and cfg.chart["nodes"] == 256
    assert cfg.tol("max_rel_error_at_smallest", 0.1) == 0.2
    assert cfg.make_grid().size == 256


def test_shipped_config_files_load(tmp_path):
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for name in REGISTRY:
        data = json.loads((root / f"{name}.json").read_text())
        cfg = make_config(name, data)
        assert cfg.epsilons == tuple(sorted(cfg.epsilons, reverse=True))


# experiments and reports

def test_geometry_checks_all_pass():
    rep = run(make_config("geometry-checks"))
    assert rep.passed
    assert {c.id for c in rep.criteria} == {"AC-9", "AC-12"}


def test_cost_expansion_report():
    rep = run(make_config("cost-expansion"))
    assert rep.passed
    H = dict(rep.series("entropic_cost"))
    assert set(H) == set(LADDER)
    assert 0.0115 <= H[0.1] <= 0.0135
    assert rep.fits["residual"].slope >= 1.8


def test_every_criterion_cites_an_id():
    rep = run(make_config("ibp"))
    assert all(c.id.startswith("AC-") or c.passed is None for c in rep.criteria)


def test_json_round_trip():
    rep = run(make_config("symrelent"))
    data = json.loads(to_json(rep))
    assert data["experiment"] == "symrelent" and data["seed"] == 42
    assert data["config"]["epsilons"] == LADDER
    assert len(data["rows"]) == len(rep.rows)
    assert data["fits"]["sym_kl"]["slope"] == pytest.approx(rep.fits["sym_kl"].slope)
    assert [c["id"] for c in data["criteria"]] == [c.id for c in rep.criteria]
    assert data["passed"] is True


def test_csv_row_count():
    rep = run(make_config("score"))
    body = [line for line in to_csv(rep).splitlines() if not line.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    assert rows[0] == ["epsilon", "quantity", "value", "se"]
    assert len(rows) - 1 == len(LADDER) * len(rep.quantities())


def test_output_is_byte_identical_for_fixed_seed(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit(run(make_config("moments", SMALL_MC)), "csv", a)
    emit(run(make_config("moments", SMALL_MC)), "csv", b)
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    emit(run(make_config("moments", {**SMALL_MC, "seed": 7})), "csv", c)
    assert a.read_bytes() != c.read_bytes()


def test_emit_rejects_unknown_format():
    with pytest.raises(UsageError):
        emit(ExperimentReport("x", {}), "xml")


def test_nonfinite_values_serialize():
    rep = ExperimentReport("x", {"seed": 1})
    rep.add(0.1, "q", float("inf"))
    assert json.loads(to_json(rep))["rows"][0]["value"] == "inf"


# command line

def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in REGISTRY:
        assert name in out


def test_cli_runs_and_writes(tmp_path, capsys):
    out = tmp_path / "geo.json"
    assert main(["geometry-checks", "--out", str(out), "--quiet"]) == 0
    data = json.loads(out.read_text())
    assert data["passed"] and "wall_clock" not in data
    assert "AC-9" in capsys.readouterr().out


def test_cli_config_file_and_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epsilons": [0.4, 0.2, 0.1], "trajectories": 1000}))
    out = tmp_path / "m.csv"
    code = main(["moments", "--config", str(cfg), "--format", "csv", "--seed", "3", "--out", str(out), "--quiet"])
    text = out.read_text()
    assert "# seed: 3" in text
    assert code in (0, 1)


def test_cli_exit_code_follows_criteria(tmp_path):
    # an impossible tolerance fails the criterion and the exit code
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tolerances": {"residual_max": 0.0}}))
    assert main(["ibp", "--config", str(cfg), "--out", str(tmp_path / "i.json"), "--quiet"]) == 1


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["no-such-experiment"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"epsilons": [0.1, 0.2, 0.4]}))
    assert main(["symrelent", "--config", str(bad)]) == 2
    bad.write_text("{not json")
    assert main(["symrelent", "--config", str(bad)]) == 2
    assert "usage error" in capsys.readouterr().err


def test_cli_dump(tmp_path):
    out = tmp_path / "hk.json"
    assert main(["heatkernel-checks", "--dump", "--out", str(out), "--quiet"]) == 0
    dump = tmp_path / "heatkernel-checks_dump"
    vals, meta = load_kernel(dump / "heat_flat_eps0.1")
    assert vals.shape == (512, 512) and meta["tag"] == "spectral_1d"
    K = heat_kernel_1d(make_chart("flat"), Grid.uniform(-6, 6, 512), 0.1)
    assert np.array_equal(vals, np.exp(K.log_values))


def test_cli_dump_ensemble(tmp_path):
    out = tmp_path / "mld.json"
    main(["mld-stationarity", "--dump", "--trajectories", "500", "--out", str(out), "--quiet"])
    rows = list(csv.reader((tmp_path / "mld-stationarity_dump" / "mld_ensemble.csv").open()))
    assert rows[0] == ["trajectory", "init_x0", "term_x0", "clipped"]
    assert len(rows) == 501


def test_build_config_defaults_echo():
    cfg = build_config("x", {"params": {"a": 1}}, {"seed": 5})
    assert cfg.seed == 5 and cfg.param("a") == 1 and cfg.raw["experiment"] == "x"
