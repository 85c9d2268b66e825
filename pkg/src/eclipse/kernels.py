"""Kernel backend selection.

The numba kernels are the default; set ECLIPSE_NUMBA=0 to force the
pure-numpy path. When numba is not importable the numpy path is used with a
warning. benchmarks/bench_kernels.py compares the two side by side.
"""

from __future__ import annotations

import os
import warnings

from eclipse import _kernels_numpy as numpy_impl

METRIC_AUC = numpy_impl.METRIC_AUC
METRIC_AP = numpy_impl.METRIC_AP

_FLAG = os.environ.get("ECLIPSE_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in {"0", "false", "no", "off"}

numba_impl = None
if _WANT_NUMBA:
    try:
        from eclipse import _kernels_numba as numba_impl
    except ImportError:
        warnings.warn(
            "numba is not importable; falling back to pure-numpy kernels",
            RuntimeWarning,
            stacklevel=2,
        )

_active = numba_impl if numba_impl is not None else numpy_impl
BACKEND = "numba" if numba_impl is not None else "numpy"

rank_auc = _active.rank_auc
average_precision = _active.average_precision
metric_over_resamples = _active.metric_over_resamples
fit_logistic = _active.fit_logistic
second_derivative_grid = _active.second_derivative_grid
minimize_scalar_gd = _active.minimize_scalar_gd


def warmup() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs.

    No-op cost on the numpy path; on the numba path this front-loads the
    one-time compile so timed sections measure algorithm time only.
    """
    import numpy as np

    s = np.array([0.1, 0.9, 0.5, 0.4])
    y = np.array([0, 1, 1, 0], dtype=np.int64)
    rank_auc(s, y)
    average_precision(s, y)
    metric_over_resamples(s, y, np.array([[0, 1, 2, 3]], dtype=np.int64), METRIC_AUC)
    metric_over_resamples(s, y, np.array([[0, 1, 2, 3]], dtype=np.int64), METRIC_AP)
    fit_logistic(
        np.array([[0.0], [1.0], [2.0], [3.0]]),
        np.array([0.0, 0.0, 1.0, 1.0]),
        np.ones(4),
        1.0,
        50,
        1e-6,
    )
    second_derivative_grid(np.linspace(-1, 1, 8), 1.0, 1.0, 2.0, 0.0, 0.0)
    minimize_scalar_gd(0.0, 1.0, 1.0, 2.0, 0.5, 0.0, 0.3, 100, 1e-9)
