import math

import numpy as np
import pytest

import viscminmax as vm


def test_registry():
    names = vm.problem_names()
    assert "double_well" in names and "ellipsoid_loop" in names
    assert vm.canonical_problem_key("quadratic_saddle:neg=2") == "quadratic_saddle:neg=2,pos=1"
    with pytest.raises(vm.ConfigError, match="valid problems"):
        vm.Problem("nope")


def test_problem_evaluation():
    p = vm.Problem("double_well")
    assert p.dim == 2
    x = np.array([0.3, -0.2])
    assert p.value(0.0, x) == pytest.approx((0.09 - 1) ** 2 + 5 * 0.04)
    g = p.gradient(0.0, x)
    h = 1e-6
    fd = [(p.value(0.0, x + h * e) - p.value(0.0, x - h * e)) / (2 * h) for e in np.eye(2)]
    assert np.allclose(g, fd, atol=1e-6)
    assert p.hessian(0.0, np.zeros(2)).shape == (2, 2)
    rec = p.refine(np.array([0.05, 0.02]), 0.01)
    assert rec["morse"]["index"] == 1
    assert np.linalg.norm(rec["point"]) < 1e-8
    assert p.seed_frames.shape == (33, 2)


def test_width_curve_monotone():
    p = vm.Problem("double_well")
    c = p.width_curve([0.0, 0.01, 0.02, 0.03], budget=20)
    assert len(c["betas"]) == 4
    assert all(a <= b for a, b in zip(c["betas"], c["betas"][1:]))
    assert c["betas"][0] == pytest.approx(1.0, abs=1e-4)


def test_run_and_round_trip(tmp_path):
    rec = vm.run(problem__key="planted_saddle", entropy__max_sigmas=1)
    r = rec["results"][0]
    assert r["record"]["morse"]["index"] == 1
    assert r["superseded"][0]["morse"]["index"] == 2
    assert rec == vm.run({"problem.key": "planted_saddle", "entropy.max_sigmas": 1})

    out = vm.solve(tmp_path, entropy__max_sigmas=2)
    assert (tmp_path / "run.json").exists()
    assert (tmp_path / "plotdata" / "spectra.csv").exists()
    assert vm.load_run(tmp_path / "run.json") == out


def test_config_errors():
    with pytest.raises(vm.ConfigError, match="unknown config key"):
        vm.run(grid__nn=3)
    with pytest.raises(vm.ConfigError):
        vm.run(grid__hi=0.5)
    assert "perturb.epsilons" in vm.default_config()
    assert len(vm.config_keys()) == len(vm.default_config())


def test_entropy_bound_and_selftest():
    s = 0.01
    assert vm.entropy_bound(s) == pytest.approx(1 / (s * math.log(1 / s) * math.log(math.log(1 / s))))
    rows = vm.selftest("entropy")
    assert len(rows) == 1 and rows[0]["pass"]
