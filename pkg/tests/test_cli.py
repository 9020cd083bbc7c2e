import numpy as np
import pytest

from rffkit import cli
from rffkit.data import gen_spatial, write_csv
from rffkit.errors import InputError, ModelFormatError
from rffkit.experiments import RunConfig, run_fit, run_psd_sample, stream
from rffkit.kernels import Family, KernelSpec
from rffkit.model import RFFModel, dumps, fit_rff_model, load, loads, save
from rffkit.report import Report, format_value
from rffkit.spectral import sample_frequencies_iid, sample_frequencies_leverage


def run(argv, capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def _body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


@pytest.fixture
def train_csv(tmp_path):
    p = tmp_path / "train.csv"
    write_csv(gen_spatial(120, 0), p)
    return p


class TestReport:
    def test_format_value(self):
        assert format_value(0.1) == "0.1"
        assert format_value(True) == "true"
        assert format_value((1, 2)) == "1 2"
        assert format_value(np.float64(2.5)) == "2.5"
        assert format_value(float("nan")) == "nan"

    def test_layout(self):
        r = Report("demo", {"b": 2, "a": 1.5}, ["x", "y"])
        r.add(1, 0.25)
        assert r.to_csv() == "# rffkit demo\n# a=1.5\n# b=2\nx,y\n1,0.25\n"
        with pytest.raises(ValueError):
            r.add(1)

    def test_companion_files(self, tmp_path):
        rep = run_psd_sample(RunConfig("psd-sample", m=5, samples=1, grid_points=8))
        written = rep.write(tmp_path / "psd.csv")
        assert [p.name for p in written] == ["psd.csv", "psd.freqs.csv"]
        assert len(_body(written[1].read_text())) == 6


class TestModelFile:
    def _model(self, seed=0, leverage=False):
        ds = gen_spatial(80, seed)
        spec = KernelSpec(Family.SQUARED_EXPONENTIAL, lengthscale=0.7)
        if leverage:
            omega = sample_frequencies_leverage(spec, ds.X, 20, 1.0, seed)
        else:
            omega = sample_frequencies_iid(spec, 20, 2, seed)
        model, fitted, cv = fit_rff_model(ds.X, ds.y, spec, omega, cv_rng=stream(seed, 3))
        return ds, model, fitted, cv

    @pytest.mark.parametrize("leverage", [False, True])
    def test_round_trip_exact(self, tmp_path, leverage):
        ds, model, fitted, _ = self._model(leverage=leverage)
        save(model, tmp_path / "m.txt")
        back = load(tmp_path / "m.txt")
        np.testing.assert_array_equal(back.omega, model.omega)
        np.testing.assert_array_equal(back.weights, model.weights)
        assert back.spec == model.spec and back.lam == model.lam
        np.testing.assert_allclose(back.predict(ds.X), fitted, rtol=1e-12, atol=1e-12)

    def test_header_layout(self):
        _, model, _, cv = self._model()
        lines = dumps(model).splitlines()
        assert lines[0] == "rffmodel v1"
        assert lines[1].startswith("family=se sigma=1 lengthscale=0.69999999999999996")
        assert lines[2] == f"lambda={format(cv.best_lambda, '.17g')} m=20 d=2"
        assert len(lines) == 3 + 20 + 40

    def test_truncated(self):
        _, model, _, _ = self._model()
        text = dumps(model)
        for cut in (1, 2, 10, len(text.splitlines()) - 1):
            with pytest.raises(ModelFormatError, match="truncated"):
                loads("\n".join(text.splitlines()[:cut]) + "\n")

    def test_version_mismatch(self):
        _, model, _, _ = self._model()
        with pytest.raises(ModelFormatError, match="version"):
            loads(dumps(model).replace("rffmodel v1", "rffmodel v2", 1))
        with pytest.raises(ModelFormatError):
            loads("hello\n")

    def test_corrupt_value(self):
        _, model, _, _ = self._model()
        lines = dumps(model).splitlines()
        lines[5] = "abc,1"
        with pytest.raises(ModelFormatError, match="line 6"):
            loads("\n".join(lines))

    def test_wrong_dimension(self):
        _, model, _, _ = self._model()
        with pytest.raises(InputError, match="d=2"):
            model.predict(np.zeros((3, 3)))

    def test_leverage_weights_are_folded(self):
        ds, model, fitted, _ = self._model(leverage=True)
        plain = RFFModel(model.spec, model.lam, model.omega, model.weights)
        np.testing.assert_allclose(plain.predict(ds.X), fitted, rtol=1e-12, atol=1e-12)


class TestCli:
    def test_unknown_flag(self, capsys):
        code, out, err = run(["toy-spatial", "--bogus", "1"], capsys)
        assert code == 2 and out == ""
        assert err.count("\n") == 1 and err.startswith("rffkit: error: usage:")

    def test_missing_command(self, capsys):
        code, _, err = run([], capsys)
        assert code == 2 and err.startswith("rffkit: error: usage:")

    def test_unknown_sampler(self, capsys):
        code, _, err = run(["approx-error", "--samplers", "iid,magic"], capsys)
        assert code == 2 and "magic" in err

    def test_runtime_error_single_line(self, capsys):
        code, out, err = run(["psd-sample", "--kernel", "polynomial"], capsys)
        assert code == 1 and out == ""
        assert err.count("\n") == 1
        assert err.startswith("rffkit: error: unsupported-family:")

    def test_orf_for_cauchy_rejected(self, capsys):
        code, _, err = run(["approx-error", "--kernel", "cauchy", "--samplers", "orf", "--m-list", "4",
                            "--repeats", "1", "--n", "5"], capsys)
        assert code == 1 and "SE kernel only" in err

    def test_stdout_output(self, capsys):
        code, out, _ = run(["bias-variance", "--seed", "3"], capsys)
        assert code == 0
        assert out.startswith("# rffkit bias-variance\n")
        body = _body(out)
        assert body[0] == "degree,train_mse,test_mse"
        assert [r.split(",")[0] for r in body[1:]] == ["1", "2", "5"]

    def test_config_echo(self, capsys):
        _, out, _ = run(["toy-spatial", "--m", "30", "--seed", "4", "--lambda", "0.5"], capsys)
        header = [l for l in out.splitlines() if l.startswith("# ")]
        assert "# m=30" in header and "# seed=4" in header and "# lam=0.5" in header
        assert "# n=500" in header

    def test_toy_spatial_schema(self, capsys):
        _, out, _ = run(["toy-spatial"], capsys)
        body = _body(out)
        assert body[0] == "model,train_mse,test_mse,lambda"
        assert [r.split(",")[0] for r in body[1:]] == ["linear", "kernel_regression", "kernel_ridge"]

    def test_approx_error_timing_column(self, capsys):
        args = ["approx-error", "--m-list", "8", "--repeats", "2", "--n", "20"]
        _, out, _ = run(args, capsys)
        assert _body(out)[0] == "m,sampler,seed,max_abs_err,frobenius_err"
        _, out, _ = run(args + ["--timing"], capsys)
        assert _body(out)[0].endswith(",wall_seconds")

    def test_approx_error_all_samplers(self, capsys):
        _, out, _ = run(["approx-error", "--m-list", "8,16", "--repeats", "2", "--n", "30",
                         "--samplers", "iid,qmc,orf,leverage"], capsys)
        rows = [r.split(",") for r in _body(out)[1:]]
        assert len(rows) == 2 * (2 + 1 + 2 + 2)
        assert sum(r[1] == "qmc" for r in rows) == 2

    def test_feature_sweep_rejects_leverage(self, capsys):
        code, _, err = run(["feature-sweep", "--sampler", "leverage"], capsys)
        assert code == 1 and "leverage" in err

    def test_psd_point_masses(self, tmp_path, capsys):
        out = tmp_path / "psd.csv"
        code, _, _ = run(["psd-sample", "--point-masses", "1,2", "--samples", "1", "--out", str(out)], capsys)
        assert code == 0
        f = np.array([float(r.split(",")[2]) for r in _body(out.read_text())[1:]])
        power = np.abs(np.fft.rfft(f)) ** 2
        assert power[[1, 2]].sum() > (1 - 1e-12) * power.sum()
        freqs = {float(r.split(",")[1]) for r in _body((tmp_path / "psd.freqs.csv").read_text())[1:]}
        assert freqs <= {1.0, 2.0}

    def test_fit_then_predict(self, tmp_path, train_csv, capsys):
        model_path = tmp_path / "model.txt"
        code, _, _ = run(["fit", "--input", str(train_csv), "--m", "40", "--seed", "2",
                          "--out", str(model_path)], capsys)
        assert code == 0
        cfg = RunConfig("fit", seed=2, m=40, input=str(train_csv))
        _, fitted = run_fit(cfg)
        pred_path = tmp_path / "pred.csv"
        code, _, _ = run(["predict", "--model", str(model_path), "--input", str(train_csv),
                          "--out", str(pred_path)], capsys)
        assert code == 0
        body = _body(pred_path.read_text())
        assert body[0] == "row_index,prediction"
        got = np.array([float(r.split(",")[1]) for r in body[1:]])
        np.testing.assert_allclose(got, fitted, rtol=1e-12, atol=1e-12)

    def test_fit_needs_out(self, train_csv, capsys):
        code, _, err = run(["fit", "--input", str(train_csv)], capsys)
        assert code == 2 and "--out" in err

    def test_predict_wrong_columns(self, tmp_path, train_csv, capsys):
        model_path = tmp_path / "model.txt"
        run(["fit", "--input", str(train_csv), "--m", "10", "--lambda", "1", "--out", str(model_path)], capsys)
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c,d\n1,2,3,4\n")
        out = tmp_path / "pred.csv"
        code, _, err = run(["predict", "--model", str(model_path), "--input", str(bad), "--out", str(out)], capsys)
        assert code == 1 and "d=2" in err
        assert not out.exists()

    def test_predict_truncated_model(self, tmp_path, train_csv, capsys):
        model_path = tmp_path / "model.txt"
        run(["fit", "--input", str(train_csv), "--m", "10", "--lambda", "1", "--out", str(model_path)], capsys)
        lines = model_path.read_text().splitlines()
        model_path.write_text("\n".join(lines[:-3]) + "\n")
        out = tmp_path / "pred.csv"
        code, _, err = run(["predict", "--model", str(model_path), "--input", str(train_csv), "--out", str(out)],
                           capsys)
        assert code == 1 and err.startswith("rffkit: error: model-format: truncated")
        assert not out.exists()

    def test_missing_input_file(self, tmp_path, capsys):
        code, _, err = run(["fit", "--input", str(tmp_path / "none.csv"), "--out", str(tmp_path / "m")], capsys)
        assert code == 1 and "no such file" in err

    def test_inputs_not_mutated(self, tmp_path, train_csv, capsys):
        before = train_csv.read_bytes()
        model_path = tmp_path / "model.txt"
        run(["fit", "--input", str(train_csv), "--m", "10", "--out", str(model_path)], capsys)
        model_before = model_path.read_bytes()
        run(["predict", "--model", str(model_path), "--input", str(train_csv)], capsys)
        assert train_csv.read_bytes() == before and model_path.read_bytes() == model_before

    def test_feature_sweep_statuses(self, capsys):
        _, out, _ = run(["feature-sweep", "--m-list", "10,100", "--n", "100"], capsys)
        rows = [r.split(",") for r in _body(out)[1:]]
        status = {(r[0], r[1]): r[5] for r in rows}
        # 20 training points cannot pin down 200 feature columns
        assert status[("100", "kernel_regression")] == "rank_deficient"
        assert status[("10", "kernel_regression")] == "ok"
