import csv
import datetime as dt
import json

import numpy as np
import pytest

from failcast import Family, LogLocationScale
from failcast.cli import main
from tests.conftest import heat_exchanger_shaped_records


def records_to_csv(records, path):
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit_id", "group_id", "censor", "event_time", "t0", "t1",
                         "trunc_left", "multiplicity"])
        for r in records:
            t0 = t1 = ""
            if r.interval is not None:
                t0 = "" if r.interval[0] == 0.0 else repr(r.interval[0])
                t1 = repr(r.interval[1])
            writer.writerow([r.unit_id, r.group_id, r.censor.value,
                             "" if r.time is None else repr(r.time), t0, t1,
                             "" if r.trunc_left is None else repr(r.trunc_left),
                             r.multiplicity])
    return path


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "tubes.csv"
    return str(records_to_csv(heat_exchanger_shaped_records(), path))


def write_config(path, **overrides):
    cfg = {
        "seed": 11,
        "model": {"kind": "weibull", "hierarchy": True, "p": 0.05},
        "priors": {"eta_tp": {"type": "lognormal_interval", "lower": 0.63, "upper": 31.78}},
        "sampler": {"chains": 2, "warmup": 250, "keep": 150},
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestFit:
    def test_fit_outputs(self, tmp_path, data_csv, capsys):
        cfg = write_config(tmp_path / "cfg.json")
        out = tmp_path / "out"
        assert main(["fit", "--config", cfg, "--data", data_csv, "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "left=4" in text and "interval=7" in text and "right=289" in text
        rows = read_csv(out / "draws.csv")
        # header + chains*keep rows; columns: chain, iteration, 4 hypers + 2*3 groups
        assert len(rows) == 1 + 2 * 150
        assert len(rows[0]) == 2 + 10
        rhat_rows = read_csv(out / "rhat.csv")
        assert rhat_rows[0] == ["param", "rhat", "ess"]
        assert len(rhat_rows) == 1 + 10

    def test_fit_deterministic(self, tmp_path, data_csv):
        cfg = write_config(tmp_path / "cfg.json")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["fit", "--config", cfg, "--data", data_csv, "--out", str(out1)])
        main(["fit", "--config", cfg, "--data", data_csv, "--out", str(out2)])
        assert (out1 / "draws.csv").read_bytes() == (out2 / "draws.csv").read_bytes()
        assert (out1 / "rhat.csv").read_bytes() == (out2 / "rhat.csv").read_bytes()

    def test_seed_flag_changes_output(self, tmp_path, data_csv):
        cfg = write_config(tmp_path / "cfg.json")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["fit", "--config", cfg, "--data", data_csv, "--out", str(out1)])
        main(["fit", "--config", cfg, "--data", data_csv, "--out", str(out2),
              "--seed", "99"])
        assert (out1 / "draws.csv").read_bytes() != (out2 / "draws.csv").read_bytes()


class TestPredict:
    @pytest.fixture()
    def fitted(self, tmp_path, data_csv):
        cfg = write_config(tmp_path / "cfg.json")
        out = tmp_path / "fit"
        main(["fit", "--config", cfg, "--data", data_csv, "--out", str(out)])
        return str(out / "draws.csv")

    def test_rows_and_cumulative_monotonicity(self, tmp_path, data_csv, fitted):
        cfg = write_config(tmp_path / "p.json",
                           prediction={"alpha": 0.05, "method": "poisson",
                                       "windows": [{"delta_t": 1.0, "steps": 5}],
                                       "draws": fitted})
        out = tmp_path / "pred"
        assert main(["predict", "--config", cfg, "--data", data_csv,
                     "--out", str(out)]) == 0
        rows = read_csv(out / "predictions.csv")
        assert rows[0] == ["scope", "window_start", "window_end", "lower", "median",
                           "mean", "upper", "alpha", "method", "B"]
        # scopes: all + 3 groups, 5 cumulative windows
        assert len(rows) == 1 + 4 * 5
        for scope in ("all", "plant1"):
            medians = [float(r[4]) for r in rows[1:] if r[0] == scope]
            uppers = [float(r[6]) for r in rows[1:] if r[0] == scope]
            assert medians == sorted(medians)
            assert uppers == sorted(uppers)

    def test_method_flag_override(self, tmp_path, data_csv, fitted):
        cfg = write_config(tmp_path / "p.json",
                           prediction={"windows": [{"delta_t": 1.0}], "draws": fitted})
        out = tmp_path / "pred"
        main(["predict", "--config", cfg, "--data", data_csv, "--out", str(out),
              "--method", "exact", "--alpha", "0.1"])
        rows = read_csv(out / "predictions.csv")
        assert rows[1][8] == "exact"
        assert float(rows[1][7]) == 0.1

    def test_missing_draws_is_config_error(self, tmp_path, data_csv):
        cfg = write_config(tmp_path / "p.json")
        assert main(["predict", "--config", cfg, "--data", data_csv,
                     "--out", str(tmp_path / "x")]) == 2

    def test_draws_model_mismatch(self, tmp_path, data_csv, fitted):
        cfg = write_config(tmp_path / "p.json",
                           model={"kind": "frechet", "hierarchy": False, "pool": True},
                           priors={"t_p": {"type": "lognormal_interval", "lower": 1, "upper": 10},
                                   "sigma": {"type": "lognormal_interval", "lower": 0.08, "upper": 4.0}},
                           prediction={"windows": [{"delta_t": 1.0}], "draws": fitted})
        assert main(["predict", "--config", cfg, "--data", data_csv,
                     "--out", str(tmp_path / "x")]) == 2


class TestRoll:
    def test_weekly_loop_with_events(self, tmp_path, data_csv):
        cfg_path = write_config(tmp_path / "cfg.json")
        fit_out = tmp_path / "fit"
        main(["fit", "--config", cfg_path, "--data", data_csv, "--out", str(fit_out)])
        events = tmp_path / "events.csv"
        events.write_text("step,unit_id,kind\n1,plant1-cens#0,retirement\n"
                          "2,plant1-cens#1,failure\n")
        cfg = write_config(tmp_path / "r.json",
                           roll={"steps": 3, "step_length": 0.25,
                                 "events": str(events),
                                 "draws": str(fit_out / "draws.csv")})
        out = tmp_path / "roll"
        assert main(["roll", "--config", cfg, "--data", data_csv, "--out", str(out)]) == 0
        rows = read_csv(out / "predictions.csv")
        assert len(rows) == 1 + 4 * 3  # (all + 3 groups) x 3 steps
        starts = sorted({float(r[1]) for r in rows[1:]})
        assert starts == [0.0, 0.25, 0.5]

    def test_roll_deterministic(self, tmp_path, data_csv):
        cfg_path = write_config(tmp_path / "cfg.json")
        fit_out = tmp_path / "fit"
        main(["fit", "--config", cfg_path, "--data", data_csv, "--out", str(fit_out)])
        cfg = write_config(tmp_path / "r.json",
                           roll={"steps": 2, "step_length": 0.5,
                                 "draws": str(fit_out / "draws.csv")})
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        main(["roll", "--config", cfg, "--data", data_csv, "--out", str(out1)])
        main(["roll", "--config", cfg, "--data", data_csv, "--out", str(out2)])
        assert (out1 / "predictions.csv").read_bytes() == (out2 / "predictions.csv").read_bytes()


class TestSimulate:
    def test_preset_emits_coverage_rows(self, tmp_path):
        cfg = write_config(tmp_path / "s.json",
                           simulate={"preset": "G5-baseline", "n_datasets": 2,
                                     "sampler": {"chains": 2, "warmup": 250, "keep": 150}})
        out = tmp_path / "sim"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        rows = read_csv(out / "coverage.csv")
        assert rows[0] == ["scenario", "scope", "side", "level", "coverage",
                           "mc_se", "n_datasets", "n_excluded"]
        assert len(rows) == 1 + 8  # 2 sides x 2 levels x 2 scopes
        assert {r[0] for r in rows[1:]} == {"G5-baseline"}

    def test_unknown_preset(self, tmp_path):
        cfg = write_config(tmp_path / "s.json", simulate={"preset": "nope"})
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


class TestDiagnose:
    def test_emits_km_and_probplot(self, tmp_path):
        # right-censored-only synthetic data (the estimator's supported censoring)
        rng = np.random.default_rng(3)
        d = LogLocationScale.from_quantile(Family.SEV, 0.05, 2.0, 0.6)
        rows = ["unit_id,group_id,censor,event_time"]
        for i, t in enumerate(d.rvs(rng, size=150)):
            if t < 4.0:
                rows.append(f"u{i},all,exact,{float(t)!r}")
            else:
                rows.append(f"u{i},all,right,4.0")
        data = tmp_path / "drives.csv"
        data.write_text("\n".join(rows) + "\n")
        fit_cfg = write_config(tmp_path / "f.json",
                               model={"kind": "weibull", "hierarchy": False, "pool": True},
                               priors={"t_p": {"type": "lognormal_interval", "lower": 0.2, "upper": 20},
                                       "sigma": {"type": "lognormal_interval", "lower": 0.08, "upper": 4.0}})
        fit_out = tmp_path / "fit"
        main(["fit", "--config", fit_cfg, "--data", str(data), "--out", str(fit_out)])
        diag_cfg = write_config(tmp_path / "d.json",
                                model={"kind": "weibull", "hierarchy": False, "pool": True},
                                priors={"t_p": {"type": "lognormal_interval", "lower": 0.2, "upper": 20},
                                        "sigma": {"type": "lognormal_interval", "lower": 0.08, "upper": 4.0}},
                                diagnose={"draws": str(fit_out / "draws.csv")})
        out = tmp_path / "diag"
        assert main(["diagnose", "--config", diag_cfg, "--data", str(data),
                     "--out", str(out)]) == 0
        km = read_csv(out / "km.csv")
        assert km[0][:4] == ["time", "survival", "lower", "upper"]
        assert len(km) > 10
        surv = [float(r[1]) for r in km[1:]]
        assert surv == sorted(surv, reverse=True)
        points = read_csv(out / "probplot_points.csv")
        assert points[0] == ["log_time", "quantile_scale"]
        band = read_csv(out / "probplot_band.csv")
        assert band[0] == ["time", "lower", "median", "upper"]
        lo, md, hi = (np.array([float(r[i]) for r in band[1:]]) for i in (1, 2, 3))
        assert np.all(lo <= md + 1e-12) and np.all(md <= hi + 1e-12)

    def test_km_rejects_interval_data(self, tmp_path, data_csv):
        cfg = write_config(tmp_path / "d.json")
        assert main(["diagnose", "--config", cfg, "--data", data_csv,
                     "--out", str(tmp_path / "x")]) == 3


class TestSeasonalPipeline:
    def warranty_csv(self, tmp_path):
        rng = np.random.default_rng(8)
        freeze = dt.date(2016, 6, 1)
        rows = ["unit_id,cluster,country,entry_date,end_date,delta"]
        for i in range(120):
            d_n = int(rng.integers(60, 500))
            entry = freeze - dt.timedelta(days=int(d_n))
            if rng.uniform() < 0.3:
                ret = entry + dt.timedelta(days=int(rng.integers(30, d_n)))
                rows.append(f"u{i},c1,US,{entry},{ret},1")
            else:
                rows.append(f"u{i},c1,{'CA' if i % 4 == 0 else 'US'},{entry},{freeze},0")
        p = tmp_path / "warranty.csv"
        p.write_text("\n".join(rows) + "\n")
        return str(p)

    @pytest.mark.parametrize("kind", ["cd", "ph"])
    def test_fit_then_monthly_predict(self, tmp_path, kind):
        data = self.warranty_csv(tmp_path)
        cfg = write_config(tmp_path / "w.json",
                           freeze_date="2016-06-01",
                           model={"kind": kind},
                           priors={},
                           sampler={"chains": 2, "warmup": 300, "keep": 200})
        fit_out = tmp_path / "fit"
        assert main(["fit", "--config", cfg, "--data", data, "--out", str(fit_out)]) == 0
        draws_file = fit_out / "draws_c1.csv"
        assert draws_file.exists()
        rhat_rows = read_csv(fit_out / "rhat.csv")
        assert rhat_rows[0] == ["cluster", "param", "rhat", "ess"]
        pred_cfg = write_config(tmp_path / "wp.json",
                                freeze_date="2016-06-01",
                                model={"kind": kind},
                                priors={},
                                prediction={"months": 2,
                                            "draws": str(fit_out / "draws.csv")})
        out = tmp_path / "pred"
        assert main(["predict", "--config", pred_cfg, "--data", data,
                     "--out", str(out)]) == 0
        rows = read_csv(out / "predictions.csv")
        assert len(rows) == 1 + 2  # one cluster, two months
        assert rows[1][0] == "c1"
        assert float(rows[1][5]) > 0  # predicted mean returns


class TestErrors:
    def test_missing_data_file(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        code = main(["fit", "--config", cfg, "--data", str(tmp_path / "absent.csv"),
                     "--out", str(tmp_path / "o")])
        assert code == 3

    def test_bad_config(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"model": {"kind": "tea-leaves"}}')
        code = main(["fit", "--config", str(p), "--data", "x.csv",
                     "--out", str(tmp_path / "o")])
        assert code == 2
