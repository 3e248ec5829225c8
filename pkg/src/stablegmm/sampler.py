"""Seeded stable variates by the Chambers-Mallows-Stuck transform."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import StableParams

__all__ = ["SamplerSpec", "cms_parameters", "sample", "standard_variates"]

_SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class SamplerSpec:
    params: StableParams
    n: int
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed <= _SEED_MAX:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))


def cms_parameters(alpha: float, beta: float) -> tuple[float, float]:
    """Shift ``B`` and scale ``S`` of the transform for unit ``c_tilde``.

    With ``k = beta tan(pi alpha / 2)``, ``B = arctan(k) / alpha`` and the
    usual factor ``(1 + k^2)^(1 / (2 alpha))`` times the scale
    ``c^(1/alpha) = c_tilde (1 + k^2)^(-1 / (2 alpha))`` is exactly
    ``c_tilde``, so ``S = 1`` here.
    """
    k = beta * math.tan(math.pi * alpha / 2.0)
    return math.atan(k) / alpha, 1.0


def standard_variates(alpha: float, beta: float, uniforms: np.ndarray) -> np.ndarray:
    """Transform pairs of uniforms on [0, 1) into standardized variates.

    ``uniforms`` has shape ``(2, n)``: the first row drives the angle and the
    second, through ``-log(1 - U)``, the exponential variable.
    """
    B, S = cms_parameters(alpha, beta)
    V = math.pi * (uniforms[0] - 0.5)
    W = -np.log1p(-uniforms[1])
    shifted = alpha * (V + B)
    with np.errstate(divide="ignore", over="ignore"):
        return (
            S
            * np.sin(shifted)
            / np.cos(V) ** (1.0 / alpha)
            * (np.cos(V - shifted) / W) ** ((1.0 - alpha) / alpha)
        )


def sample(spec: SamplerSpec) -> np.ndarray:
    """Draw ``spec.n`` variates with the law of ``spec.params``.

    Only raw uniforms are taken from ``numpy.random.Generator(PCG64(seed))``;
    both the generator and its ``random`` method are bit-stable across
    platforms, so a seed reproduces the same draws everywhere.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    uniforms = rng.random((2, spec.n))
    p = spec.params
    return p.tau + p.c_tilde * standard_variates(p.alpha, p.beta, uniforms)
