"""Self-checks of the series machinery, run by ``stablegmm validate``.

Each suite returns a :class:`SuiteResult` whose failures carry the
``(theta, k, n, u)`` tuple at which a check broke.  Fields that do not apply
to a suite are ``None``.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .core import RegionConfig, StableParams
from .density import (
    Fixed,
    balanced_cut,
    central_coefficients,
    density,
    lemma_holds,
    series_angle,
    tail_coefficients,
    truncation_order,
)
from .moments import (
    Side,
    central_moment_term,
    expected_moments,
    moment_exponents,
    sample_moments,
    tail_moment_term,
)
from .sampler import SamplerSpec, sample

__all__ = [
    "BATTERY",
    "Failure",
    "Report",
    "SCOPES",
    "SuiteResult",
    "run",
    "suite_closedform",
    "suite_lemma",
    "suite_slaw",
    "suite_symmetry",
]

BATTERY = (
    StableParams(1.5, 0.0, 0.0, 1.0),
    StableParams(1.5, 0.3, 0.0, 1.0),
    StableParams(1.8, -0.5, 1.0, 2.0),
    StableParams(0.7, 0.2, 0.0, 1.0),
    StableParams(0.5, -0.3, -1.0, 0.5),
)
SCOPES = ("lemma", "closedform", "symmetry", "slaw")
_MAX_REPORTED = 20


@dataclass(frozen=True)
class Failure:
    theta: tuple[float, ...] | None
    k: int | None
    n: int | None
    u: float | None
    detail: str


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list[Failure] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.checks > 0 and not self.failures

    def record(self, ok: bool, failure: Callable[[], Failure]) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(failure())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "failure_count": len(self.failures),
            "failures": [asdict(f) for f in self.failures[:_MAX_REPORTED]],
            "seconds": self.seconds,
        }


@dataclass
class Report:
    suites: list[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "suites": [s.to_dict() for s in self.suites]}

    def table(self) -> str:
        lines = [f"{'suite':<12}{'result':<8}{'checks':>8}{'failures':>10}{'seconds':>10}"]
        for s in self.suites:
            status = "PASS" if s.passed else "FAIL"
            lines.append(f"{s.name:<12}{status:<8}{s.checks:>8}{len(s.failures):>10}{s.seconds:>10.2f}")
            for f in s.failures[:_MAX_REPORTED]:
                lines.append(f"    theta={f.theta} k={f.k} n={f.n} u={f.u}: {f.detail}")
        return "\n".join(lines)


def _timed(fn):
    def wrapper(*args, **kwargs) -> SuiteResult:
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result

    wrapper.__name__, wrapper.__doc__ = fn.__name__, fn.__doc__
    return wrapper


# -- suites -------------------------------------------------------------------


@_timed
def suite_lemma(
    Ms=(0.5, 1.5, 3.0), Ls=(2.0, 4.0, 10.0), alphas=(1.1, 1.5, 1.9), window: int = 200
) -> SuiteResult:
    """Brute-force scan of the truncation inequality after the returned order."""
    result = SuiteResult("lemma")
    for alpha in alphas:
        for M in Ms:
            for L in Ls:
                n0 = truncation_order(M, L, alpha)
                bad = [n for n in range(n0, n0 + window + 1) if not lemma_holds(n, M, L, alpha)]
                result.record(
                    not bad,
                    lambda: Failure(
                        (alpha,), None, bad[0], M, f"inequality fails for L={L} after n0={n0}"
                    ),
                )
    return result


def _asymmetric_region(params: StableParams) -> RegionConfig:
    cut = balanced_cut(params.alpha)
    # unequal sides so that odd and even central terms both survive
    return RegionConfig.around(params, 1.1 * cut, 0.9 * cut)


def _tail_quadrature(k: int, n: int, params: StableParams, a: float, positive: bool) -> float:
    s, _ = moment_exponents(k, params.regime)
    sine = (-1.0) ** (n - 1) * math.sin(math.pi * n * series_angle(params, "tail", positive))
    coef = math.exp(tail_coefficients(params.alpha, n)) * sine / math.pi
    expo = float(s) - n * params.alpha - 1.0
    value = integrate.quad(lambda u: u**expo, a, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return a * a * coef * value


def _central_quadrature(k: int, n: int, params: StableParams, a1: float, a2: float) -> float:
    _, q = moment_exponents(k, params.regime)
    q = float(q)
    sine = (-1.0) ** (n - 1) * math.sin(math.pi * n * series_angle(params, "central"))
    coef = math.exp(central_coefficients(params.alpha, n)) * sine / math.pi

    def g(u):
        return abs(u) ** q * u ** (n - 1)

    right = integrate.quad(g, 0.0, a1, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    left = integrate.quad(g, -a2, 0.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return coef * (right + left)


@_timed
def suite_closedform(
    thetas=BATTERY,
    ks=range(1, 7),
    ns=range(1, 31),
    rtol: float = 1e-10,
    tail_term: Callable = tail_moment_term,
    central_term: Callable = central_moment_term,
) -> SuiteResult:
    """Closed-form moment terms against quadrature of single series terms.

    ``tail_term`` and ``central_term`` default to the library functions and
    can be replaced to check that the suite detects a broken term.
    """
    result = SuiteResult("closedform")
    for params in thetas:
        region = _asymmetric_region(params)
        a1, a2 = region.ratios(params)
        theta = params.as_tuple()
        for k in ks:
            for n in ns:
                pieces = (
                    ("tail right", tail_term(k, n, params, region, Side.RIGHT), _tail_quadrature(k, n, params, a1, True), a1),
                    ("tail left", tail_term(k, n, params, region, Side.LEFT), _tail_quadrature(k, n, params, a2, False), -a2),
                    ("central", central_term(k, n, params, region), _central_quadrature(k, n, params, a1, a2), None),
                )
                for name, closed, quad, u in pieces:
                    ok = abs(closed - quad) <= rtol * abs(quad) + 1e-300
                    result.record(
                        ok,
                        lambda: Failure(theta, k, n, u, f"{name}: closed form {closed!r} vs quadrature {quad!r}"),
                    )
    return result


@_timed
def suite_symmetry(probes: int = 10_000, seed: int = 0, rtol: float = 1e-12) -> SuiteResult:
    """Reflection ``(u, beta) -> (-u, -beta)`` of the zone density at fixed order.

    Each probe draws alpha, beta, u and the order N; the cuts sit
    symmetrically about tau so the mirrored point falls in the mirrored zone.
    """
    result = SuiteResult("symmetry")
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        upper = rng.random() < 0.5
        alpha = rng.uniform(1.05, 1.95) if upper else rng.uniform(0.3, 0.95)
        beta = rng.uniform(-0.99, 0.99)
        params = StableParams(alpha, beta, 0.0, 1.0)
        mirror = params.replace(beta=-beta)
        region = RegionConfig.around(params, 2.5 if upper else 0.3)
        u = float(rng.uniform(-1.0, 1.0) * 10.0 ** rng.uniform(-2.0, 1.5))
        N = int(rng.integers(1, 41))
        left = density(u, params, region, Fixed(N)).value
        right = density(-u, mirror, region, Fixed(N)).value
        ok = abs(left - right) <= rtol * max(1.0, abs(left))
        result.record(ok, lambda: Failure(params.as_tuple(), None, N, u, f"density {left!r} vs mirrored {right!r}"))
    return result


@_timed
def suite_slaw(
    params: StableParams = StableParams(1.5, 0.3, 0.0, 1.0),
    ks=(1, 3, 6),
    sizes=(1_000, 10_000, 100_000),
    seeds=range(10),
    slope: float = -0.5,
    slope_tol: float = 0.15,
) -> SuiteResult:
    """Log-log slope of the sample-moment error against sample size.

    The error at each size is the root mean square over seeds of the gap
    between the sample mean and the series expectation.
    """
    result = SuiteResult("slaw")
    region = RegionConfig.around(params, balanced_cut(params.alpha))
    expected = expected_moments(ks, params, region)
    errors = np.zeros((len(sizes), len(ks)))
    for seed in seeds:
        data = sample(SamplerSpec(params, max(sizes), seed))
        for i, n in enumerate(sizes):
            errors[i] += (sample_moments(data[:n], ks, params, region) - expected) ** 2
    rms = np.sqrt(errors / len(seeds))
    for j, k in enumerate(ks):
        fitted = float(np.polyfit(np.log(sizes), np.log(rms[:, j]), 1)[0])
        result.record(
            abs(fitted - slope) <= slope_tol,
            lambda: Failure(params.as_tuple(), k, None, None, f"slope {fitted:.4f} outside {slope} +/- {slope_tol}"),
        )
    return result


_SUITES = {
    "lemma": suite_lemma,
    "closedform": suite_closedform,
    "symmetry": suite_symmetry,
    "slaw": suite_slaw,
}


def run(scope: str = "all", **overrides) -> Report:
    """Run one suite or all of them.

    ``overrides`` maps a suite name to keyword arguments for that suite.
    """
    if scope != "all" and scope not in _SUITES:
        raise ValueError(f"unknown scope {scope!r}; choose from {', '.join(SCOPES)} or all")
    names = SCOPES if scope == "all" else (scope,)
    return Report([_SUITES[name](**overrides.get(name, {})) for name in names])
