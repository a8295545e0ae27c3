"""FFT plumbing shared by the spectral modules.

All transforms go through scipy.fft.  The worker count is read once from
the GAUGEWAVE_THREADS environment variable (default: all CPUs); pass-through
wrappers keep call sites short and make the threading policy one-line
auditable.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.fft as _sfft


def _worker_count() -> int:
    raw = os.environ.get("GAUGEWAVE_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


WORKERS = _worker_count()


def fftn(a: np.ndarray) -> np.ndarray:
    return _sfft.fftn(a, workers=WORKERS)


def ifftn(a: np.ndarray) -> np.ndarray:
    return _sfft.ifftn(a, workers=WORKERS)
