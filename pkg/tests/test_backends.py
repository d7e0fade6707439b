import json
import os
import subprocess
import sys

import numpy as np
import pytest

from hetldp import _kernels_py as py
from hetldp import sampling
from hetldp._backend import BACKEND

compiled = pytest.importorskip("hetldp._kernels", reason="compiled kernels not built")


def keys(n, seed=1):
    return sampling.stream_keys(seed, n)


def test_default_backend_is_compiled():
    assert BACKEND == "cython"


def test_derive_keys_identical():
    streams = np.array([0, 1, 2**63, 2**64 - 1], dtype=np.uint64)
    np.testing.assert_array_equal(compiled.derive_keys(7, streams), py.derive_keys(7, streams))


@pytest.mark.parametrize("fn", ["raw_draws", "uniform_draws", "normal_draws"])
def test_draws_identical(fn):
    k = keys(500)
    np.testing.assert_array_equal(getattr(compiled, fn)(k, 3, 17), getattr(py, fn)(k, 3, 17))


@pytest.mark.parametrize("d", [1, 2, 7])
def test_sphere_and_hemisphere_identical(d):
    n = 2000
    k = keys(n, d)
    radii = np.linspace(0.5, 3.0, n)
    np.testing.assert_array_equal(compiled.sphere(k, d, radii, 5), py.sphere(k, d, radii, 5))
    dirs = py.sphere(keys(n, 99), d, np.ones(n), 0)
    y_c, used_c = compiled.hemisphere(k, dirs, radii, 2)
    y_p, used_p = py.hemisphere(k, dirs, radii, 2)
    np.testing.assert_array_equal(y_c, y_p)
    np.testing.assert_array_equal(used_c, used_p)


def test_forced_fallback_reproduces_results():
    code = (
        "import json, numpy as np\n"
        "from hetldp import _backend, multidim_mech, PrivacyBudgets\n"
        "pts = np.tile([0.3, -0.2, 0.1], (50, 1))\n"
        "r = multidim_mech.privatize_batch(pts, PrivacyBudgets.homogeneous(0.5, 50), 1.0, 4)\n"
        "print(json.dumps({'backend': _backend.BACKEND, 'y': r.points.tolist()}))\n"
    )
    env = dict(os.environ, HETLDP_PURE_PYTHON="1")
    out = json.loads(subprocess.run([sys.executable, "-c", code], env=env, check=True,
                                    capture_output=True, text=True).stdout)
    assert out["backend"] == "python"
    from hetldp import PrivacyBudgets, multidim_mech
    ref = multidim_mech.privatize_batch(np.tile([0.3, -0.2, 0.1], (50, 1)), PrivacyBudgets.homogeneous(0.5, 50), 1.0, 4)
    np.testing.assert_array_equal(np.array(out["y"]), ref.points)


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    runpy.run_path(str(script))["main"](["--n", "200", "--d", "3", "--repeat", "1"])
    out = capsys.readouterr().out
    for name in ("derive_keys", "uniform_draws", "normal_draws", "sphere", "hemisphere"):
        assert name in out
