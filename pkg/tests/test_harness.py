"""Harness: config loading, presets, runs, output files and the command line."""
import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ckam.harness import (
    ConfigError,
    emit_outputs,
    format_float,
    list_presets,
    load_config,
    run_experiment,
)
from ckam.harness.cli import main
from ckam.kernels import Matern

S2 = math.sqrt(2)

# hyperparameter tables for the three experiments:
# sampler -> (nu, eta, epsilon, alpha_star, cycle_length, beta)
TABLES = {
    "bimodal": {
        "rw": (math.sqrt(15), None, None, None, None, None),
        "am": (2.38 / S2, 0.1, None, None, None, None),
        "rbam": (None, 0.1, None, None, None, None),
        "gam": (2.38 / S2, None, 0.75, 0.234, None, None),
        "kam": (2 * 2.38 / S2, None, 0.75, 0.234, None, None),
        "ckam": (2 * 2.38 / S2, None, 0.75, 0.234, 1000, 0.4),
    },
    "mixture5": {
        "rw": (math.sqrt(15), None, None, None, None, None),
        "am": (2.38 / S2, 0.01, None, None, None, None),
        "rbam": (None, 0.001, None, None, None, None),
        "gam": (2.38 / S2, None, 0.75, 0.234, None, None),
        "kam": (2 * 2.38 / S2, None, 0.75, 0.234, None, None),
        "ckam": (2 * 2.38 / S2, None, 0.75, 0.234, 1000, 0.4),
    },
    "highd": {
        "rw": (2.38 / math.sqrt(32), None, None, None, None, None),
        "am": (2.38 / math.sqrt(32), 0.01, None, None, None, None),
        "rbam": (None, 0.001, None, None, None, None),
        "gam": (2.38 / math.sqrt(32), None, 0.75, 0.234, None, None),
        "kam": (2 * 2.38 / math.sqrt(32), None, 0.75, 0.234, None, None),
        "ckam": (2 * 2.38 / math.sqrt(32), None, 0.75, 0.234, 8000, 0.6),
    },
}
SUBSAMPLE = {"bimodal": (30, 50), "mixture5": (30, 50), "highd": (100, 100)}
INIT = {"bimodal": (-8.0, 0.0), "mixture5": (0.0, 0.0), "highd": (0.0,) * 32}
TARGET = {"bimodal": "bimodal2d", "mixture5": "mixture5_2d", "highd": "grid5_highd"}


def small(preset, **extra):
    """Inline config on top of a preset with a short iteration budget."""
    lines = [f'preset = "{preset}"', "[run]", f"budget_iters = {extra.pop('iters', 300)}"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    return load_config("\n".join(lines))


class TestPresets:
    def test_all_presets_listed(self):
        assert list_presets() == sorted(f"{e}/{s}" for e in TABLES for s in TABLES[e])

    @pytest.mark.parametrize("name", [f"{e}/{s}" for e in TABLES for s in TABLES[e]])
    def test_table_values(self, name):
        exp, sampler = name.split("/")
        cfg = load_config(name)
        sc = cfg.sampler_config
        nu, eta, eps, alpha, L, beta = TABLES[exp][sampler]
        assert cfg.sampler == sampler and cfg.target == TARGET[exp]
        assert cfg.theta0 == INIT[exp]
        if nu is not None:
            assert sc.nu == pytest.approx(nu, rel=1e-12)
        if eta is not None:
            assert sc.eta == eta
        if eps is not None:
            assert (sc.epsilon, sc.alpha_star) == (eps, alpha)
        if L is not None:
            assert (sc.cycle_length, sc.beta) == (L, beta)
        if sampler == "rbam":
            assert sc.cov0 == 1.0
        if sampler in ("kam", "ckam"):
            assert sc.kernel == Matern(4, 2)
            assert sc.subsample_size == SUBSAMPLE[exp][sampler == "ckam"]

    def test_highd_dimension_override_rescales_nu(self):
        cfg = load_config('preset = "highd/kam"\n[target]\ndimension = 8')
        assert cfg.dimension == 8 and cfg.theta0 == (0.0,) * 8
        assert cfg.sampler_config.nu == pytest.approx(4.76 / math.sqrt(8))

    def test_override_on_top_of_preset(self):
        cfg = load_config('preset = "bimodal/ckam"\n[sampler]\nbeta = 0.5')
        assert cfg.sampler_config.beta == 0.5 and cfg.sampler_config.cycle_length == 1000

    def test_budget_kind_replaced_by_override(self):
        cfg = load_config('preset = "bimodal/rw"\n[run]\nbudget_seconds = 2.0')
        assert (cfg.budget_iters, cfg.budget_seconds) == (None, 2.0)

    def test_meshes(self):
        assert load_config("bimodal/rw").mesh.lo == (-14.0, -14.0)
        assert load_config("mixture5/rw").mesh.hi == (16.0, 16.0)
        assert load_config("highd/rw").mesh is None


class TestConfigErrors:
    @pytest.mark.parametrize("text,key,match", [
        ('preset = "bimodal/rw"\n[sampler]\nstepsize = 1.0', "sampler.stepsize", "unknown config key"),
        ('[target]\nname = "banana"\n[sampler]\nname = "rw"', "target.name", "unknown target"),
        ('[target]\nname = "bimodal2d"\n[sampler]\nname = "hmc"', "sampler.name", "unknown sampler"),
        ('preset = "bimodal/kam"\n[kernel]\nname = "cosine"', "kernel.name", "unknown kernel"),
        ('[target]\nname = "bimodal2d"\n[sampler]\nname = "ckam"\ncycle_length = 100\n[run]\nbudget_iters = 1',
         "sampler.beta", "beta"),
        ('preset = "bimodal/ckam"\n[sampler]\nbeta = 1.5', "sampler.beta", "beta"),
        ('preset = "bimodal/rw"\n[run]\nbudget_seconds = 2.0\nbudget_iters = 5', "run.budget_iters", "exactly one"),
        ('preset = "bimodal/rw"\n[run]\ntheta0 = [1.0]', "run.theta0", "coordinates"),
        ('preset = "bimodal/rw"\n[sampler]\nnu = "big"', "sampler.nu", "number"),
        ('preset = "bimodal/rw"\n[kernel]\nname = "rbf"', "kernel.name", "no kernel"),
        ('preset = "mixture5/rw"\n[target]\ndimension = 3', "target.dimension", "fixed dimension"),
        ('preset = "highd/rw"\n[diag]\nmesh_bins = 10', "diag.mesh_bins", "2-d"),
        ('preset = "bimodal/rw"\n[run]\nseed = -1', "run.seed", "64-bit"),
        ('preset = "nowhere/rw"', "preset", "unknown preset"),
    ])
    def test_named_key(self, text, key, match):
        with pytest.raises(ConfigError, match=match) as info:
            load_config(text)
        assert info.value.key == key
        assert key in str(info.value) or key == "preset"

    def test_parse_error(self):
        with pytest.raises(ConfigError, match="could not parse"):
            load_config("[sampler\nnu = 1")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.toml")


class TestRuns:
    def test_zero_budget_writes_headers_only(self, tmp_path):
        res = run_experiment(small("bimodal/am", iters=0))
        emit_outputs(res, tmp_path)
        assert (tmp_path / "trace.csv").read_text() == "iter,wall_clock_s,phase,stepsize,accepted,x0,x1\n"
        assert (tmp_path / "checkpoints.csv").read_text() == "wall_clock_s,sym_kl,ess\n"
        summary = json.loads((tmp_path / "summary.json").read_text())["summary"]
        assert summary["n_samples"] == 0 and summary["final_sym_kl"] is None

    @pytest.mark.parametrize("sampler", ["rw", "gam", "ckam"])
    def test_virtual_clock_is_byte_identical(self, tmp_path, sampler):
        cfg = small(f"mixture5/{sampler}", iters=2500)
        cfg = cfg.with_overrides(seed=7)
        for name in ("a", "b"):
            emit_outputs(run_experiment(cfg, virtual_clock=True), tmp_path / name)
        for f in ("trace.csv", "checkpoints.csv", "summary.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_trace_layout(self, tmp_path):
        res = run_experiment(small("bimodal/ckam", iters=2500), virtual_clock=True)
        paths = emit_outputs(res, tmp_path)
        with paths["trace"].open() as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == len(res.trace) + 1 == 2501
        assert {r[2] for r in rows[1:]} == {"exploration", "sampling"}
        assert all(r[4] in ("0", "1") for r in rows[1:])
        # positions round-trip exactly
        back = np.array([[float(v) for v in r[5:]] for r in rows[1:]])
        np.testing.assert_array_equal(back, np.array([r.position for r in res.trace]))

    def test_checkpoints(self):
        res = run_experiment(small("mixture5/kam", iters=3500, seed=1), virtual_clock=True)
        times = [c.wall_clock_s for c in res.checkpoints]
        assert times == [1000, 2000, 3000, 3500]
        assert all(c.sym_kl >= 0 and 0 < c.ess <= 3500 for c in res.checkpoints)

    def test_summary_keys_sorted(self, tmp_path):
        paths = emit_outputs(run_experiment(small("bimodal/rw"), virtual_clock=True), tmp_path)
        text = paths["summary"].read_text()
        doc = json.loads(text)
        assert list(doc) == ["config", "summary"]
        assert list(doc["summary"]) == sorted(doc["summary"])
        assert doc["config"]["sampler"] == "rw"

    def test_seconds_budget_virtual(self):
        cfg = load_config('preset = "bimodal/gam"\n[run]\nbudget_seconds = 1200.0')
        res = run_experiment(cfg, virtual_clock=True)
        assert len(res.trace) == 1200

    def test_seconds_budget_wall_clock(self):
        cfg = load_config('preset = "bimodal/rw"\n[run]\nbudget_seconds = 0.3')
        res = run_experiment(cfg)
        assert 0.3 <= res.total_seconds < 0.6
        assert len(res.samples) == len(res.trace)  # burnin 0 under a time budget

    def test_highd_metric_is_marginal(self):
        cfg = load_config('preset = "highd/gam"\n[target]\ndimension = 4\n[run]\nbudget_iters = 1000')
        res = run_experiment(cfg, virtual_clock=True)
        assert len(res.checkpoints) == 1 and res.checkpoints[0].sym_kl > 0

    def test_unwritable_output(self, tmp_path):
        from ckam.harness import RunError
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(RunError, match="cannot write"):
            emit_outputs(run_experiment(small("bimodal/rw"), virtual_clock=True), blocker / "sub")

    def test_bimodal_ckam_recovers_target(self):
        finals = [run_experiment(small("bimodal/ckam", iters=50_000).with_overrides(seed=s)).checkpoints[-1].sym_kl
                  for s in range(5)]
        assert max(finals) <= 1.0


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert float(format_float(x)) == x


class TestCLI:
    def test_presets_list(self, capsys):
        assert main(["presets", "list"]) == 0
        assert "bimodal/ckam" in capsys.readouterr().out.split()

    def test_validate(self, capsys):
        assert main(["validate", "highd/ckam"]) == 0
        assert "ckam on grid5_highd (d=32)" in capsys.readouterr().out

    def test_validate_bad(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text('[target]\nname = "bimodal2d"\n[sampler]\nname = "nuts"\n')
        assert main(["validate", str(p)]) == 2
        assert "sampler.name" in capsys.readouterr().err

    def test_run_and_runtime_error(self, tmp_path, capsys):
        assert main(["run", "bimodal/gam", "--budget-iters", "500", "--out", str(tmp_path / "o"),
                     "--virtual-clock"]) == 0
        assert (tmp_path / "o" / "trace.csv").exists()
        blocker = tmp_path / "f"
        blocker.write_text("")
        assert main(["run", "bimodal/gam", "--budget-iters", "50", "--out", str(blocker / "x")]) == 3

    def test_multiple_seeds_in_parallel(self, tmp_path):
        assert main(["run", "mixture5/am", "--seed", "1", "2", "--budget-iters", "400", "--jobs", "2",
                     "--virtual-clock", "--out", str(tmp_path)]) == 0
        a = (tmp_path / "mixture5-am-seed1" / "trace.csv").read_bytes()
        b = (tmp_path / "mixture5-am-seed2" / "trace.csv").read_bytes()
        assert a != b
        main(["run", "mixture5/am", "--seed", "1", "--budget-iters", "400", "--virtual-clock",
              "--out", str(tmp_path / "solo")])
        assert (tmp_path / "solo" / "trace.csv").read_bytes() == a

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "ckam", "presets", "list"], capture_output=True, text=True)
        assert out.returncode == 0 and "highd/rbam" in out.stdout

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["run", "bimodal/rw", "--budget-iters", "1", "--budget-seconds", "1"])
        assert info.value.code == 2
