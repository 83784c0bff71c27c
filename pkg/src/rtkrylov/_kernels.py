"""Hot transfer-sweep kernels: numba-compiled with a pure-numpy fallback.

The implicit-Euler marching recursions are sequential along the space axis,
so they cannot be expressed as single numpy primitives. The numba versions
run the full double loop natively; the numpy versions vectorize over rays
and keep the sequential loop in Python. Set RTKRYLOV_DISABLE_NUMBA=1 to
force the numpy path (it is also used automatically when numba is missing).
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("RTKRYLOV_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in ("1", "true", "yes", "on")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def backend() -> str:
    return "numba" if USING_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# batched sweeps over a (n_rays, n_space) block, zero inflow
# ---------------------------------------------------------------------------

def _sweep_down_py(dtau, src, out):
    # out_{i+1} = (out_i + dtau_i * src_{i+1}) / (1 + dtau_i), out_1 = 0
    n = src.shape[1]
    out[:, 0] = 0.0
    acc = np.zeros(src.shape[0])
    for i in range(n - 1):
        acc = (acc + dtau[:, i] * src[:, i + 1]) / (1.0 + dtau[:, i])
        out[:, i + 1] = acc


def _sweep_up_py(dtau, src, out):
    # out_{i-1} = (out_i + dtau_{i-1} * src_{i-1}) / (1 + dtau_{i-1}), out_n = 0
    n = src.shape[1]
    out[:, n - 1] = 0.0
    acc = np.zeros(src.shape[0])
    for i in range(n - 1, 0, -1):
        acc = (acc + dtau[:, i - 1] * src[:, i - 1]) / (1.0 + dtau[:, i - 1])
        out[:, i - 1] = acc


def _sweep_lines_py(dtau, src, node_off, dtau_off, out):
    # per-line down-sweep over ragged storage (lines concatenated)
    for l in range(node_off.size - 1):
        a, b = node_off[l], node_off[l + 1]
        d = dtau_off[l]
        acc = 0.0
        out[a] = 0.0
        for i in range(b - a - 1):
            acc = (acc + dtau[d + i] * src[a + i + 1]) / (1.0 + dtau[d + i])
            out[a + i + 1] = acc


if HAVE_NUMBA:
    @njit(cache=True)
    def _sweep_down_nb(dtau, src, out):  # pragma: no cover - compiled
        m, n = src.shape
        for k in range(m):
            acc = 0.0
            out[k, 0] = 0.0
            for i in range(n - 1):
                acc = (acc + dtau[k, i] * src[k, i + 1]) / (1.0 + dtau[k, i])
                out[k, i + 1] = acc

    @njit(cache=True)
    def _sweep_up_nb(dtau, src, out):  # pragma: no cover - compiled
        m, n = src.shape
        for k in range(m):
            acc = 0.0
            out[k, n - 1] = 0.0
            for i in range(n - 1, 0, -1):
                acc = (acc + dtau[k, i - 1] * src[k, i - 1]) / (1.0 + dtau[k, i - 1])
                out[k, i - 1] = acc

    @njit(cache=True)
    def _sweep_lines_nb(dtau, src, node_off, dtau_off, out):  # pragma: no cover
        for l in range(node_off.size - 1):
            a, b = node_off[l], node_off[l + 1]
            d = dtau_off[l]
            acc = 0.0
            out[a] = 0.0
            for i in range(b - a - 1):
                acc = (acc + dtau[d + i] * src[a + i + 1]) / (1.0 + dtau[d + i])
                out[a + i + 1] = acc
else:
    _sweep_down_nb = None
    _sweep_up_nb = None
    _sweep_lines_nb = None

_sweep_down_impl = _sweep_down_nb if USING_NUMBA else _sweep_down_py
_sweep_up_impl = _sweep_up_nb if USING_NUMBA else _sweep_up_py
_sweep_lines_impl = _sweep_lines_nb if USING_NUMBA else _sweep_lines_py


def sweep_down(dtau: np.ndarray, src: np.ndarray) -> np.ndarray:
    """March the downward recursion for a batch of rays (rows of src)."""
    out = np.empty_like(src)
    if src.shape[0]:
        _sweep_down_impl(dtau, src, out)
    return out


def sweep_up(dtau: np.ndarray, src: np.ndarray) -> np.ndarray:
    """March the upward recursion for a batch of rays (rows of src)."""
    out = np.empty_like(src)
    if src.shape[0]:
        _sweep_up_impl(dtau, src, out)
    return out


def sweep_lines(dtau: np.ndarray, src: np.ndarray, node_off: np.ndarray,
                dtau_off: np.ndarray) -> np.ndarray:
    """March the entry-to-exit recursion over concatenated characteristic lines."""
    out = np.empty_like(src)
    if node_off.size > 1:
        _sweep_lines_impl(dtau, src, node_off, dtau_off, out)
    return out
