"""End-to-end results must not depend on which kernel backend is active."""
import math

import numpy as np
import pytest

from fibrand import _pykernels, kernels
from fibrand.builtins import builtin_group
from fibrand.cli import main
from fibrand.cube import CubeParams, FibonacciCube
from fibrand.oracle import Dist, expected_norm_identity_check, law_of_pair, norm_trajectory
from fibrand.rng import RandomSource
from fibrand.stats import cycle_type
from fibrand.verify import group_table, random_pmf

from conftest import KERNEL_NAMES
from test_cli import GOLDEN_A5


def _run():
    src = RandomSource(4)
    ng = builtin_group("A9")
    cube = FibonacciCube(ng.group, ng.generators, CubeParams(t=24)).build(RandomSource(3))
    perms = [cube.sample_pair(src) for _ in range(50)]
    sl = builtin_group("SL(3,2)")
    mcube = FibonacciCube(sl.group, sl.generators, CubeParams(t=15)).build(RandomSource(5))
    mats = [mcube.sample_r(src) for _ in range(20)]
    s4, table = group_table("S4")
    gen = np.random.default_rng(0)
    x, w = Dist(table, random_pmf(24, gen)), Dist(table, random_pmf(24, gen))
    pcube = FibonacciCube(s4.group, s4.generators, CubeParams(t=12)).build(RandomSource(6))
    return {"perms": perms, "types": [cycle_type(p) for p in perms], "mats": mats,
            "conv": (x * w).p, "lhs": expected_norm_identity_check(x, w, 0.3)["lhs"],
            "pair": law_of_pair(table, pcube).p}


def test_native_and_python_paths_agree(monkeypatch):
    native = _run()
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(_pykernels, name))
    python = _run()
    for key in ("perms", "types", "mats"):
        assert native[key] == python[key]
    assert np.allclose(native["conv"], python["conv"], atol=1e-15)
    assert np.allclose(native["pair"], python["pair"], atol=1e-15)
    assert abs(native["lhs"] - python["lhs"]) < 1e-14


def test_golden_output_on_each_backend(backend, capsys):
    assert main(["sample", "--group", "A5", "--t", "20", "--n", "3", "--seed", "7"]) == 0
    assert capsys.readouterr().out == GOLDEN_A5


def test_norm_monotonicity_on_each_backend(backend):
    ng, table = group_table("SL(2,3)")
    cube = FibonacciCube(ng.group, ng.generators, CubeParams(t=30)).build(RandomSource(1))
    norms = norm_trajectory(table, cube)
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
    assert norms[-1] >= 1 / math.sqrt(24) - 1e-12


def test_pure_python_flag_selects_fallback():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-c", "from fibrand import kernels; print(kernels.BACKEND)"],
                         env={"FIBRAND_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
