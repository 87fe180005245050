import csv
import filecmp
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from gdpcast import cli, pipeline
from gdpcast.errors import NumericalError
from gdpcast.metrics import growth_rate, mae, mape, rmse, u_theil
from gdpcast.series import TimeSeries, read_csv
from gdpcast.svg import inverse_points

FAST = ["--gibbs_iter", "300", "--gibbs_burn", "100"]
SVG_NS = "{http://www.w3.org/2000/svg}"


def run_all(out: Path, *extra) -> None:
    for cmd in ("fit", "forecast", "plot", "report"):
        assert cli.main([cmd, "--output_dir", str(out), *FAST, *extra]) == 0, cmd


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    run_all(base / "a")
    run_all(base / "b")
    return base / "a", base / "b"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_overrides():
    assert cli.parse_overrides(["--horizon", "8", "--seed=3", "--gibbs-iter", "10"]) == {
        "horizon": "8", "seed": "3", "gibbs_iter": "10"}
    with pytest.raises(pipeline.InputError):
        cli.parse_overrides(["horizon", "8"])
    with pytest.raises(pipeline.InputError):
        cli.parse_overrides(["--horizon"])


def test_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nhorizon = 8  # inline\nmodels = hw, dlm\noffline = false\n"
                        "output_dir = out\n")
    cfg = pipeline.load_config(cfg_file, {"horizon": "4"})
    assert cfg.horizon == 4
    assert cfg.models == ("hw", "dlm")
    assert cfg.offline is False
    assert cfg.out == tmp_path / "out"
    assert cfg.train_end == "2016-Q4" and cfg.transform == "log" and cfg.level == 0.95
    assert cfg.gibbs_iter == 5000 and cfg.gibbs_burn == 1000
    again = pipeline.parse_config_text(cfg.as_text())
    assert pipeline.RunConfig(**again) == cfg


@pytest.mark.parametrize("text", ["horizon = x\n", "colour = red\n", "horizon 3\n",
                                  "models = hw,arima\n", "train_end = 2016Q4\n",
                                  "horizon = 0\n"])
def test_bad_config_exits_2(tmp_path, text, capsys):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text(text)
    assert cli.main(["fit", "--config", str(cfg_file)]) == 2
    assert "input error" in capsys.readouterr().err


def test_smoke_outputs(runs):
    out, _ = runs
    for name in ("scorecard_fitted.csv", "scorecard_forecast.csv", "growth_comparison.csv",
                 "gibbs_chain.csv", "sarima_grid.csv", "run_meta.txt", "report.txt",
                 "fitted_values.csv", "acf_pacf.csv", "stationarity.csv", "ljung_box.csv",
                 "hw_selection.csv", "dlm_posterior.csv", "models/fit.json"):
        assert (out / name).stat().st_size > 0, name
    assert [r["model"] for r in rows(out / "scorecard_fitted.csv")] == [
        "Holt-Winters", "SARIMA", "DLM"]
    grid = rows(out / "sarima_grid.csv")
    assert len(grid) == 16
    aics = [float(r["aic"]) for r in grid]
    assert aics == sorted(aics)
    growth = rows(out / "growth_comparison.csv")
    for m in pipeline.MODELS:
        assert sum(r["model"] == m for r in growth) == 12
    assert len(rows(out / "gibbs_chain.csv")) == 200
    for m in pipeline.MODELS:
        fc = rows(out / f"forecast_{m}.csv")
        assert len(fc) == 12 and fc[0]["date"] == "2017-Q1"
        assert all(float(r["lower"]) > 0 for r in fc)


def test_determinism_byte_identical(runs):
    a, b = runs
    names = sorted(p.name for p in a.glob("*") if p.suffix in (".csv", ".svg", ".txt")
                   and p.name != "run_meta.txt" and p.name != "config_used.txt")
    assert len(names) > 15
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors
    assert (a / "models/fit.json").read_bytes() == (b / "models/fit.json").read_bytes()


def test_fitted_metrics_recomputable(runs):
    out, _ = runs
    table = rows(out / "fitted_values.csv")
    card = {r["model"]: r for r in rows(out / "scorecard_fitted.csv")}
    for key, label in pipeline.LABELS.items():
        pairs = [(float(r["observed"]), float(r[key])) for r in table if r[key]]
        a, p = np.array(pairs).T
        row = card[label]
        assert int(row["n"]) == a.size
        for name, val in (("rmse", rmse(a, p)), ("mae", mae(a, p)), ("mape", mape(a, p)),
                          ("u_theil_u1", u_theil(a, p, "U1")),
                          ("u_theil_u2", u_theil(a, p, "U2"))):
            assert float(row[name]) == pytest.approx(val, rel=1e-9, abs=1e-12)
    # the flagged row holds the column minimum
    for name in ("rmse", "mae", "mape"):
        best = min(card.values(), key=lambda r: float(r[name]))
        assert name in best["best"].split(";")


def test_forecast_metrics_and_growth_recomputable(runs):
    out, _ = runs
    data = read_csv(pipeline.FIXTURE)
    test = data.window((2017, 1), None)
    card = {r["model"]: r for r in rows(out / "scorecard_forecast.csv")}
    growth = rows(out / "growth_comparison.csv")
    obs_growth = growth_rate(data)
    for key, label in pipeline.LABELS.items():
        p = np.array([float(r["point"]) for r in rows(out / f"forecast_{key}.csv")])
        a = test.values
        assert float(card[label]["rmse"]) == pytest.approx(rmse(a, p), rel=1e-9)
        assert float(card[label]["mape"]) == pytest.approx(mape(a, p), rel=1e-9)
        assert float(card[label]["u_theil_u2"]) == pytest.approx(u_theil(a, p, "U2"), rel=1e-9)
        g = [r for r in growth if r["model"] == key]
        path = np.r_[data.window(None, (2016, 4)).values[-1], p]
        assert np.allclose([float(r["model_growth"]) for r in g], path[1:] / path[:-1] - 1,
                           rtol=1e-9, atol=1e-12)
        assert np.allclose([float(r["observed_growth"]) for r in g], obs_growth.values[-12:],
                           rtol=1e-12)


def test_report_numbers_come_from_csv(runs):
    out, _ = runs
    report = (out / "report.txt").read_text()
    for r in rows(out / "scorecard_fitted.csv"):
        assert f"{float(r['rmse']):.3f}" in report
    assert "U-Theil (U1)" in report and "U-Theil (U2)" in report
    assert report.count("_4") >= 16


def panel_transform(el):
    return tuple(float(el.get(f"data-{k}")) for k in ("ax", "bx", "ay", "by"))


def test_svg_well_formed_and_band(runs):
    out, _ = runs
    svgs = sorted(out.glob("*.svg"))
    assert {p.name for p in svgs} == {"fit_forecast_hw.svg", "fit_forecast_sarima.svg",
                                      "fit_forecast_dlm.svg", "acf_pacf.svg",
                                      "gibbs_trace.svg", "growth.svg"}
    for p in svgs:
        root = ET.parse(p).getroot()
        assert root.tag == f"{SVG_NS}svg" and len(root) > 0
    root = ET.parse(out / "fit_forecast_dlm.svg").getroot()
    band = root.find(f".//{SVG_NS}polygon[@id='band']")
    assert len(band.get("points").split()) == 2 * 12


@pytest.mark.parametrize("model", pipeline.MODELS)
def test_svg_parse_back(runs, model):
    out, _ = runs
    root = ET.parse(out / f"fit_forecast_{model}.svg").getroot()
    panel = root.find(f".//{SVG_NS}g[@class='panel']")
    tf = panel_transform(panel)
    line = panel.find(f"{SVG_NS}polyline[@id='forecast']")
    xy = inverse_points(line.get("points"), *tf)
    fc = rows(out / f"forecast_{model}.csv")
    assert np.allclose(xy[:, 0], 2017 + np.arange(12) / 4, rtol=0, atol=1e-6)
    assert np.allclose(xy[:, 1], [float(r["point"]) for r in fc], rtol=1e-9, atol=1e-6)
    band = inverse_points(panel.find(f"{SVG_NS}polygon[@id='band']").get("points"), *tf)
    assert np.allclose(band[:12, 1], [float(r["upper"]) for r in fc], rtol=1e-9, atol=1e-6)
    assert np.allclose(band[12:, 1][::-1], [float(r["lower"]) for r in fc], rtol=1e-9,
                       atol=1e-6)


def test_horizon_beyond_holdout_warns(tmp_path, caplog):
    out = tmp_path / "h"
    assert cli.main(["fit", "--output_dir", str(out), "--models", "hw,sarima"]) == 0
    assert cli.main(["forecast", "--output_dir", str(out), "--models", "hw,sarima",
                     "--horizon", "16"]) == 0
    card = rows(out / "scorecard_forecast.csv")
    assert all(r["n"] == "12" and r["end"] == "2019-Q4" for r in card)
    assert "metrics computed on" in caplog.text
    assert len(rows(out / "growth_comparison.csv")) == 32
    assert not (out / "gibbs_chain.csv").exists()


def test_transform_none_runs(tmp_path):
    out = tmp_path / "none"
    args = ["--output_dir", str(out), "--transform", "none", "--models", "hw"]
    assert cli.main(["fit", *args]) == 0
    assert cli.main(["forecast", *args]) == 0
    sel = rows(out / "hw_selection.csv")
    assert {r["method"] for r in sel} == {"additive", "multiplicative"}


def test_stage_order_errors(tmp_path, capsys):
    out = str(tmp_path / "empty")
    assert cli.main(["forecast", "--output_dir", out]) == 2
    assert cli.main(["plot", "--output_dir", out]) == 2
    assert cli.main(["report", "--output_dir", out]) == 2
    assert "run 'gdpcast fit' first" in capsys.readouterr().err


def test_stale_artifacts_rejected(tmp_path):
    out = str(tmp_path / "s")
    assert cli.main(["fit", "--output_dir", out, "--models", "hw"]) == 0
    assert cli.main(["forecast", "--output_dir", out, "--models", "hw",
                     "--train_end", "2015-Q4"]) == 2


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,value\n2000-Q1,1\n2000-Q3,2\n")
    assert cli.main(["fit", "--input", str(bad)]) == 2
    assert cli.main(["fit", "--input", str(tmp_path / "missing.csv")]) == 2
    assert cli.main(["fit", "--output_dir", str(tmp_path / "x"), "--train_end", "2019-Q4"]) == 2


def test_numerical_failure_exits_3(monkeypatch, tmp_path, capsys):
    def boom(cfg):
        raise NumericalError("dlm.gibbs: degenerate forecast variance")
    monkeypatch.setattr(pipeline, "run_fit", boom)
    assert cli.main(["fit", "--output_dir", str(tmp_path)]) == 3
    assert "dlm.gibbs" in capsys.readouterr().err


def test_fetch_offline_copies_fixture(tmp_path):
    target = tmp_path / "gdp.csv"
    assert cli.main(["fetch", "--input", str(target)]) == 0
    assert target.read_bytes() == pipeline.FIXTURE.read_bytes()


def test_fetch_payload(tmp_path):
    s = read_csv(pipeline.FIXTURE)
    records = [{"D3C": "Trimestre", "V": "Valor"}]
    records += [{"D3C": f"{y}{q:02d}", "V": str(v)}
                for (y, q), v in zip((s.calendar(i) for i in range(len(s))), s.values)]
    payload = tmp_path / "payload.json"
    payload.write_text(json.dumps(records))
    target = tmp_path / "fetched.csv"
    args = ["fetch", "--input", str(target), "--offline", "false", "--endpoint",
            payload.as_uri(), "--period_field", "D3C", "--value_field", "V"]
    assert cli.main(args + ["--skip_records", "1"]) == 0
    got = read_csv(target)
    assert got.origin == s.origin and np.array_equal(got.values, s.values)
    # the header record does not parse as data
    assert cli.main(args) == 4


@pytest.mark.parametrize("body", ["<html>oops</html>", '{"not": "a list"}', "[]",
                                  '[{"period": "2000-Q1", "value": "1"}, '
                                  '{"period": "2000-Q3", "value": "2"}]',
                                  '[{"period": "2000-Q1", "value": "nan"}]'])
def test_fetch_malformed_payload_exits_4(tmp_path, body, capsys):
    payload = tmp_path / "bad.json"
    payload.write_text(body)
    code = cli.main(["fetch", "--input", str(tmp_path / "o.csv"), "--offline", "false",
                     "--endpoint", payload.as_uri()])
    assert code == 4
    assert "offline = true" in capsys.readouterr().err


def test_fetch_unreachable_exits_4(tmp_path):
    assert cli.main(["fetch", "--input", str(tmp_path / "o.csv"), "--offline", "false",
                     "--endpoint", (tmp_path / "nope.json").as_uri()]) == 4
    assert cli.main(["fetch", "--input", str(tmp_path / "o.csv"), "--offline", "false"]) == 2
