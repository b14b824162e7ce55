"""Numeric inner loops, numba-jitted with a pure-numpy fallback.

The evidence kernel runs once per control tick over every remaining task,
so it is the only hot loop in the collaboration mode. Set
JOINTPLAN_PURE_NUMPY=1 to force the numpy path (automatically used when
numba is unavailable). Both paths compute identical math.
"""

import math
import os

import numpy as np

PURE_NUMPY = os.environ.get("JOINTPLAN_PURE_NUMPY", "") not in ("", "0")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAS_NUMBA = False


def evidence_scores_numpy(hx, hy, vx, vy, task_xy, alpha, beta, eps):
    """exp(-alpha * distance + beta * heading_alignment) per task.

    Heading alignment is the cosine between the velocity and the direction
    to the task, with the direction denominator floored at eps; a speed
    below eps makes the heading cue neutral (zero) for every task.
    """
    dx = task_xy[:, 0] - hx
    dy = task_xy[:, 1] - hy
    d = np.sqrt(dx * dx + dy * dy)
    speed = math.sqrt(vx * vx + vy * vy)
    if speed < eps:
        c = np.zeros_like(d)
    else:
        c = (vx * dx + vy * dy) / (speed * np.maximum(d, eps))
    return np.exp(-alpha * d + beta * c)


def _evidence_scores_loop(hx, hy, vx, vy, task_xy, alpha, beta, eps):
    n = task_xy.shape[0]
    out = np.empty(n)
    speed = math.sqrt(vx * vx + vy * vy)
    for i in range(n):
        dx = task_xy[i, 0] - hx
        dy = task_xy[i, 1] - hy
        d = math.sqrt(dx * dx + dy * dy)
        if speed < eps:
            c = 0.0
        else:
            c = (vx * dx + vy * dy) / (speed * max(d, eps))
        out[i] = math.exp(-alpha * d + beta * c)
    return out


if HAS_NUMBA:
    evidence_scores_numba = njit(cache=True)(_evidence_scores_loop)
else:
    evidence_scores_numba = None

if HAS_NUMBA and not PURE_NUMPY:
    evidence_scores = evidence_scores_numba
    ACTIVE_PATH = "numba"
else:
    evidence_scores = evidence_scores_numpy
    ACTIVE_PATH = "numpy"
