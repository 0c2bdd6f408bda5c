import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aeclab import kernels
from aeclab.aec import strong_masks
from aeclab.catalog import get_entry
from aeclab.iso import automorphisms
from aeclab.structures import make_graph, make_unary


@given(st.lists(st.integers(0, 1), min_size=16, max_size=16))
@settings(max_examples=50, deadline=None)
def test_superset_meet_parity(bits):
    flags = np.array(bits, dtype=np.uint8)
    flags[-1] = 1
    fast = kernels.superset_meet(flags, 4)
    slow = kernels.PY_KERNELS["superset_meet"](flags, 4)
    assert np.array_equal(np.asarray(fast), np.asarray(slow))


@given(st.lists(st.integers(0, 6), min_size=7, max_size=7))
@settings(max_examples=50, deadline=None)
def test_function_closure_parity(table):
    e = make_unary(table).encoded
    fast = kernels.function_closure_all(7, e.fun_arity, e.fun_off, e.fun_data)
    slow = kernels.PY_KERNELS["function_closure_all"](7, e.fun_arity, e.fun_off, e.fun_data)
    assert np.array_equal(np.asarray(fast), np.asarray(slow))


def test_component_closure_parity():
    rng = np.random.default_rng(0)
    for _ in range(10):
        adj = (rng.random((8, 8)) < 0.2).astype(np.uint8)
        adj = adj | adj.T
        np.fill_diagonal(adj, 0)
        assert np.array_equal(np.asarray(kernels.component_closure_all(adj)),
                              np.asarray(kernels.PY_KERNELS["component_closure_all"](adj)))


SCRIPT = """
import json
from aeclab import kernels
from aeclab.aec import strong_masks
from aeclab.catalog import get_entry
from aeclab.iso import automorphisms
from aeclab.structures import make_graph
g = make_graph(6, [(0, 1), (1, 2), (3, 4)])
cg = get_entry("CG").klass
print(json.dumps({"jit": kernels.USE_NUMBA, "aut": len(automorphisms(g)),
                  "meet": [int(x) for x in kernels.superset_meet(strong_masks(cg, g), 6)]}))
"""


def test_fallback_flag_agrees():
    runs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, AECLAB_NO_JIT=flag)
        proc = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
        runs[flag] = json.loads(proc.stdout)
    assert runs["1"]["jit"] is False
    assert runs["0"]["aut"] == runs["1"]["aut"] == 4
    assert runs["0"]["meet"] == runs["1"]["meet"]
