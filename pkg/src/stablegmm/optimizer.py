"""Derivative-free minimisation on a box.

The search runs a Nelder-Mead simplex in unconstrained coordinates ``z``.
Each coordinate is mapped into its bounds by

* ``x = lo + (hi - lo) * expit(z)`` for a finite interval,
* ``x = lo + exp(z)`` or ``x = hi - exp(z)`` for a half line,
* ``x = z`` for an unbounded coordinate,

so every point handed to the objective is feasible and the simplex never has
to be projected.  Tolerances are measured on the mapped points ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, logit

__all__ = ["BoxMap", "MinimizeResult", "OptimizerSettings", "minimize"]

# reflection, expansion, contraction, shrink
_RHO, _CHI, _PSI, _SIGMA = 1.0, 2.0, 0.5, 0.5
_MAX_Z_STEP = 2.0


@dataclass(frozen=True)
class OptimizerSettings:
    """Stopping rules and initial simplex size.

    The f tolerance is relative: the spread of simplex values is compared with
    ``f_tolerance * max(|f_best|, f_floor)``.  This makes the run invariant
    under a positive rescaling of the objective.
    """

    x_tolerance: float = 1e-6
    f_tolerance: float = 1e-10
    max_evaluations: int = 4000
    simplex_init_scale: tuple[float, ...] | float = 0.1
    f_floor: float = 1e-300
    max_restarts: int = 3

    def __post_init__(self) -> None:
        if not (self.x_tolerance > 0.0 and self.f_tolerance > 0.0):
            raise ValueError("tolerances must be positive")
        if int(self.max_evaluations) != self.max_evaluations or self.max_evaluations < 2:
            raise ValueError(f"max_evaluations must be an integer >= 2, got {self.max_evaluations!r}")
        scales = np.atleast_1d(np.asarray(self.simplex_init_scale, dtype=float))
        if not np.all(scales > 0.0):
            raise ValueError("simplex_init_scale must be positive")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    fun: float
    evaluations: int
    converged: bool


class BoxMap:
    """Bijection between unconstrained coordinates and a box."""

    def __init__(self, bounds: Sequence[tuple[float | None, float | None]]) -> None:
        lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
        hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
        if np.any(lo >= hi):
            raise ValueError("every lower bound must lie below its upper bound")
        self.lo, self.hi = lo, hi
        self._both = np.isfinite(lo) & np.isfinite(hi)
        self._lower = np.isfinite(lo) & ~np.isfinite(hi)
        self._upper = ~np.isfinite(lo) & np.isfinite(hi)

    def to_box(self, z: np.ndarray) -> np.ndarray:
        x = np.array(z, dtype=float)
        b, l, u = self._both, self._lower, self._upper
        x[b] = self.lo[b] + (self.hi[b] - self.lo[b]) * expit(z[b])
        x[l] = self.lo[l] + np.exp(z[l])
        x[u] = self.hi[u] - np.exp(z[u])
        # expit can round to exactly 0 or 1; clip guards against lo + width overshooting hi
        return np.clip(x, self.lo, self.hi)

    def from_box(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise ValueError(f"point {x} lies outside the box")
        z = np.array(x, dtype=float)
        b, l, u = self._both, self._lower, self._upper
        with np.errstate(divide="ignore"):
            z[b] = logit((x[b] - self.lo[b]) / (self.hi[b] - self.lo[b]))
            z[l] = np.log(x[l] - self.lo[l])
            z[u] = np.log(self.hi[u] - x[u])
        # points on the boundary map to finite coordinates just inside it
        return np.clip(z, -36.0, 36.0)

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """Diagonal of dx/dz."""
        d = np.ones_like(z)
        b, l, u = self._both, self._lower, self._upper
        e = expit(z[b])
        d[b] = (self.hi[b] - self.lo[b]) * e * (1.0 - e)
        d[l] = np.exp(z[l])
        d[u] = np.exp(z[u])
        return d


def _initial_simplex(z0, box: BoxMap, scales: np.ndarray) -> np.ndarray:
    jac = box.jacobian(z0)
    steps = np.minimum(scales / np.maximum(jac, 1e-300), _MAX_Z_STEP)
    sim = np.tile(z0, (z0.size + 1, 1))
    for i in range(z0.size):
        # step towards the roomier side so the first vertices stay distinct in x
        sim[i + 1, i] += steps[i] if z0[i] <= 0.0 else -steps[i]
    return sim


def minimize(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    bounds: Sequence[tuple[float | None, float | None]],
    settings: OptimizerSettings | None = None,
) -> MinimizeResult:
    """Minimise ``f`` over the box starting from ``x0``.

    Returns the best point seen.  It is never worse than ``x0`` and is
    ``x0`` itself when nothing better is found.  ``converged`` is true when
    the final simplex has an x-diameter below ``x_tolerance`` or an f-spread
    below the relative ``f_tolerance``.  If the simplex collapses onto a lower
    dimensional set, or the tolerances are met, the search is restarted once
    more from the best point to confirm it; at most ``max_restarts`` restarts
    are made.  Non-finite objective values are treated as ``+inf``.
    """
    settings = OptimizerSettings() if settings is None else settings
    x0 = np.asarray(x0, dtype=float)
    if len(bounds) != x0.size:
        raise ValueError("bounds and x0 differ in length")
    box = BoxMap(bounds)
    scales = np.broadcast_to(np.asarray(settings.simplex_init_scale, dtype=float), x0.shape)
    evaluations = 0

    def fz(z: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        value = float(f(box.to_box(z)))
        return value if math.isfinite(value) else math.inf

    f0 = float(f(x0))
    evaluations += 1
    f0 = f0 if math.isfinite(f0) else math.inf
    best_z, best_f = box.from_box(x0), f0
    converged = False
    budget = settings.max_evaluations

    for _attempt in range(settings.max_restarts + 1):
        sim = _initial_simplex(best_z, box, scales)
        fsim = np.array([best_f] + [fz(v) for v in sim[1:]])
        converged = False
        while True:
            order = np.argsort(fsim, kind="stable")
            sim, fsim = sim[order], fsim[order]
            xs = np.array([box.to_box(v) for v in sim])
            diameter = float(np.max(np.abs(xs[1:] - xs[0])))
            spread = float(fsim[-1] - fsim[0]) if math.isfinite(fsim[-1]) else math.inf
            f_scale = settings.f_tolerance * max(abs(fsim[0]), settings.f_floor)
            if diameter < settings.x_tolerance or spread < f_scale:
                converged = True
                break
            if evaluations >= budget:
                break
            edges = sim[1:] - sim[0]
            sv = np.linalg.svd(edges, compute_uv=False)
            if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
                break
            centroid = sim[:-1].mean(axis=0)
            zr = centroid + _RHO * (centroid - sim[-1])
            fr = fz(zr)
            if fr < fsim[0]:
                ze = centroid + _RHO * _CHI * (centroid - sim[-1])
                fe = fz(ze)
                sim[-1], fsim[-1] = (ze, fe) if fe < fr else (zr, fr)
            elif fr < fsim[-2]:
                sim[-1], fsim[-1] = zr, fr
            else:
                if fr < fsim[-1]:
                    zc = centroid + _PSI * _RHO * (centroid - sim[-1])
                    fc = fz(zc)
                    accept = fc <= fr
                else:
                    zc = centroid - _PSI * (centroid - sim[-1])
                    fc = fz(zc)
                    accept = fc < fsim[-1]
                if accept:
                    sim[-1], fsim[-1] = zc, fc
                else:
                    sim[1:] = sim[0] + _SIGMA * (sim[1:] - sim[0])
                    fsim[1:] = [fz(v) for v in sim[1:]]
        improved = fsim[0] < best_f - settings.f_tolerance * max(abs(best_f), settings.f_floor)
        if fsim[0] < best_f:
            best_z, best_f = sim[0].copy(), float(fsim[0])
        if evaluations >= budget or (converged and _attempt > 0 and not improved):
            break

    x_best = box.to_box(best_z) if best_f < f0 else x0.copy()
    return MinimizeResult(x=x_best, fun=min(best_f, f0), evaluations=evaluations, converged=converged)
