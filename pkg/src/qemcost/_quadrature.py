"""Sign-aware quadrature of sampled rates.

Sampled rates are represented by a not-a-knot cubic spline. An integration
window is cut at every grid node and at every real root of the spline, so each
piece has a single sign and Simpson's rule on it is exact for the interpolant.
Integrals of ``|g|`` or of the positive/negative parts then keep full order
across sign changes.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline, PPoly


def interpolant(times: np.ndarray, values: np.ndarray) -> PPoly:
    if len(times) >= 4:
        return CubicSpline(times, values)
    # too few nodes for not-a-knot: piecewise linear is the honest fallback
    slopes = np.diff(values) / np.diff(times)
    return PPoly(np.vstack([slopes, values[:-1]]), times)


def spline_roots(spline: PPoly, lo: float, hi: float) -> np.ndarray:
    r = np.asarray(spline.roots(extrapolate=False), dtype=float)
    r = r[np.isfinite(r)]
    return np.unique(r[(r > lo) & (r < hi)])


def signed_pieces(times, spline: PPoly, t_from: float, t_to: float) -> tuple[np.ndarray, np.ndarray]:
    """Edges of single-sign pieces on ``[t_from, t_to]`` and Simpson integrals on each."""
    times = np.asarray(times)
    inner = times[(times > t_from) & (times < t_to)]
    edges = np.unique(np.concatenate([[t_from, t_to], inner, spline_roots(spline, t_from, t_to)]))
    a, b = edges[:-1], edges[1:]
    ints = (b - a) / 6 * (spline(a) + 4 * spline((a + b) / 2) + spline(b))
    return edges, ints


def simpson_abs_parts(times, spline: PPoly, t_from: float, t_to: float) -> tuple[float, float]:
    """``(integral of positive part, integral of negative part magnitude)``."""
    _, ints = signed_pieces(times, spline, t_from, t_to)
    return float(np.sum(np.clip(ints, 0, None))), float(-np.sum(np.clip(ints, None, 0)))
