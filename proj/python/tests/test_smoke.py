import json
import math

import numpy as np
import pytest

import wavelab


def test_profiles_catalog():
    names = {p["name"]: p["compat_order"] for p in wavelab.profiles()}
    assert names["bump4"] == 3
    assert wavelab.profiles("no_such_profile") == []


def test_zero_data_stays_zero():
    out = wavelab.evolve_radial(u0="zero", t_end=0.5, r_max=4.0, h=0.02, dt=0.01)
    assert np.all(out["u"] == 0.0)
    assert np.all(out["energy"] == 0.0)


def test_energy_is_conserved_on_a_short_run():
    out = wavelab.evolve_radial(u0="bump4", amplitude=1.0, t_end=2.0, r_max=8.0, h=0.005, dt=0.0025)
    e = out["energy"]
    assert e[0] > 0
    assert np.max(np.abs(e - e[0])) / e[0] < 1e-4
    assert out["u"][0] == 0.0


def test_penrose_roundtrip():
    T, a = wavelab.to_penrose(1.0, 1.0)
    assert math.isclose(T, math.atan(2.0), rel_tol=1e-14)
    t, r = wavelab.from_penrose(T, a)
    assert math.isclose(t, 1.0, rel_tol=1e-12) and math.isclose(r, 1.0, rel_tol=1e-12)
    assert math.isclose(wavelab.boundary_time(wavelab.boundary_alpha(1.0)), 1.0, rel_tol=1e-12)


def test_kernel_identity():
    rng = np.random.default_rng(3)
    for u, w in rng.uniform(-2, 2, size=(100, 2)):
        lhs = np.sign(u + w) * abs(u + w) ** 7 - np.sign(u) * abs(u) ** 7
        rhs = 7 * abs(u) ** 6 * w - w * w * wavelab.F_kernel(u, w, 7.0)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        wavelab.Params(2, 7.0)
    with pytest.raises(ValueError, match="params.p"):
        wavelab.run_config('{"experiment": "run-radial", "params": {"n": 3}}', "/tmp/unused")


def test_run_config(tmp_path):
    cfg = {
        "experiment": "run-radial",
        "params": {"n": 3, "p": 7},
        "grid": {"r_max": 6, "h": 0.02},
        "time": {"t_end": 1, "cfl": 0.5},
        "data": {"u0": "bump4"},
        "output": "x",
    }
    res = wavelab.run_config(json.dumps(cfg), str(tmp_path))
    assert res["exit_code"] == 0
    assert (tmp_path / "manifest.json").exists()
    assert "fields.csv" in res["files"]


def test_hardy_constants_are_dilation_invariant():
    d = wavelab.hardy_constants(200, seed=5, lambdas=[0.5, 1.0, 2.0])
    assert d["finite"] and d["stable"]
    assert d["max_variation"] < 1e-10
