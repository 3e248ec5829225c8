"""Independent reference computations shared by the tests."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma

from stablegmm.density import oracle_density, series_angle
from stablegmm.moments import moment_exponents

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(24)
TAIL_END = 1e6


def _panels(edges):
    """Gauss-Legendre nodes and weights on consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (hi - lo) * _NODES[None, :] + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * _WEIGHTS[None, :]
    return x.ravel(), w.ravel()


def _pareto_remainder(params, s, positive):
    # int_U^inf u^s * (two leading tail terms) du, negligible next to the panel sum
    ang = series_angle(params, "tail", positive)
    al = params.alpha
    total = 0.0
    for n in (1, 2):
        coef = (-1) ** (n - 1) * gamma(n * al + 1) / math.factorial(n) * math.sin(math.pi * n * ang) / math.pi
        total += coef * TAIL_END ** (s - n * al) / (n * al - s)
    return total


def zone_quadrature(ks, params, region):
    """Expected moment functions by quadrature of the oracle density, zone by zone."""
    a1, a2 = region.ratios(params)
    ks = np.asarray(ks, dtype=float)
    s, q = moment_exponents(ks, params.regime)
    out = np.zeros(ks.size)
    # central zone, split at the origin
    for a, sign in ((a1, 1.0), (a2, -1.0)):
        x, w = _panels(np.linspace(0.0, a, 17))
        dens = np.array([oracle_density(sign * xi, params) for xi in x])
        out += (w * dens * x[None, :] ** q[:, None]).sum(axis=1)
    for a, positive in ((a1, True), (a2, False)):
        x, w = _panels(np.geomspace(a, TAIL_END, 60))
        sign = 1.0 if positive else -1.0
        dens = np.array([oracle_density(sign * xi, params) for xi in x])
        tail = (w * dens * x[None, :] ** s[:, None]).sum(axis=1)
        tail += np.array([_pareto_remainder(params, si, positive) for si in s])
        out += a * a * tail
    return out
