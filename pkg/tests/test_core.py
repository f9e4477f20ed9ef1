import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlwave import _core_py, core, fem
from nlwave.micromodulus import box, extend, unit_box
from nlwave.quadrature import gauss_legendre

compiled = pytest.importorskip("nlwave._core")


def _rows(impl, space, kernel, K):
    xg, wg = (np.ascontiguousarray(a) for a in gauss_legendre(space.quad_order()))
    nodes = np.ascontiguousarray(space.mesh.nodes)
    bps = np.ascontiguousarray(kernel.breakpoints, dtype=float)
    x, y, w, T = impl.row_nodes(K, nodes, bps, xg, wg)
    wk = np.ascontiguousarray(w * kernel(x - y))
    return (x, y, w, T), impl.row_accumulate(x, y, wk, T, nodes, K, space.degree, space.normalized)


def test_compiled_core_is_selected_by_default():
    assert core.IMPLEMENTATION == "compiled"


def test_env_forces_fallback():
    code = "from nlwave import core; print(core.IMPLEMENTATION)"
    env = dict(os.environ, NLWAVE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(0.05, 1.0), min_size=2, max_size=7),
    st.integers(0, 3),
    st.floats(0.1, 1.0),
    st.booleans(),
    st.sampled_from(["periodic2", "antiperiodic2"]),
)
def test_compiled_matches_fallback(widths, degree, delta, normalized, ext):
    w = np.asarray(widths)
    nodes = np.concatenate([[-1.0], -1.0 + 2.0 * np.cumsum(w) / w.sum()])
    nodes[-1] = 1.0
    space = fem.PolySpace(fem.Mesh(nodes), degree, normalized)
    kernel = extend(box(delta), ext)
    for K in range(space.mesh.N):
        (xp, yp, wp, Tp), Bp = _rows(_core_py, space, kernel, K)
        (xc, yc, wc, Tc), Bc = _rows(compiled, space, kernel, K)
        assert len(xp) == len(xc)
        # node order may differ; compare as sorted sets of (T, x, y, w)
        kp = np.lexsort((wp, yp, xp, Tp))
        kc = np.lexsort((wc, yc, xc, Tc))
        assert np.array_equal(Tp[kp], Tc[kc])
        assert np.allclose(xp[kp], xc[kc], atol=1e-15) and np.allclose(yp[kp], yc[kc], atol=1e-15)
        assert np.allclose(Bp, Bc, atol=1e-14, rtol=0)


def test_full_matrix_identical():
    space = fem.PolySpace(fem.Mesh.uniform(16), 3)
    kernel = extend(unit_box(), "periodic2")
    Bp = np.vstack([_rows(_core_py, space, kernel, K)[1] for K in range(16)])
    Bc = np.vstack([_rows(compiled, space, kernel, K)[1] for K in range(16)])
    assert np.max(np.abs(Bp - Bc)) < 1e-14


def test_accepts_read_only_buffers():
    space = fem.PolySpace(fem.Mesh.uniform(4), 1)
    nodes = space.mesh.nodes  # read-only
    xg, wg = gauss_legendre(5)  # read-only
    x, y, w, T = compiled.row_nodes(0, nodes, np.asarray([-0.5, 0.5]), xg, wg)
    assert np.isclose(w.sum(), 0.5 * 2.0)
