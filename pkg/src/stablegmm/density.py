"""Series expansions of the standardized stable density and a quadrature oracle.

Two expansions are available for the density of ``u = (x - tau) / c_tilde``:

* the *central* series in powers ``|u|^(n-1)`` with coefficients
  ``Gamma(n / alpha + 1) / n!`` -- convergent for 1 < alpha < 2, asymptotic
  as u -> 0 for 0 < alpha < 1;
* the *tail* series in powers ``|u|^(-n alpha - 1)`` with coefficients
  ``Gamma(n alpha + 1) / n!`` -- convergent for 0 < alpha < 1, asymptotic as
  |u| -> infinity for 1 < alpha < 2.

Negative arguments are handled through the reflection ``x -> -x`` which flips
the sign of the skewness.  Coefficients are evaluated in log space so that
``Gamma(n alpha + 1)`` never overflows on its own.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import digamma, gammaln

from .core import (
    ParameterError,
    Regime,
    RegionConfig,
    StableParams,
    c_from_c_tilde,
    series_skew,
)

__all__ = [
    "Adaptive",
    "Fixed",
    "OracleError",
    "SeriesEval",
    "TruncationError",
    "TruncationPolicy",
    "Zone",
    "balanced_cut",
    "central_coefficients",
    "central_order",
    "central_series",
    "char_fn",
    "density",
    "lemma_holds",
    "oracle_density",
    "series_angle",
    "tail_coefficients",
    "tail_order",
    "tail_series",
    "truncation_order",
]

_LOG_PI = math.log(math.pi)
_EPS = np.finfo(float).eps


class TruncationError(ArithmeticError):
    """No admissible truncation order exists within the safety cap."""


class OracleError(ArithmeticError):
    """The quadrature oracle failed to reach its accuracy target."""


class Zone(str, enum.Enum):
    RIGHT_TAIL = "right_tail"
    LEFT_TAIL = "left_tail"
    CENTRAL = "central"


@dataclass(frozen=True)
class Fixed:
    """Always sum exactly ``n`` terms."""

    n: int = 10

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"Fixed truncation needs an integer n >= 1, got {self.n!r}")


@dataclass(frozen=True)
class Adaptive:
    """Choose the number of terms from the coefficient envelope.

    Convergent series are truncated once the Lemma-type bound
    ``term_n <= L^-n`` certifies a remainder below ``tol``.  When the rate
    ``L`` cannot be certified within ``safety_cap`` terms, the rate is relaxed
    along ``L, sqrt(L), L^(1/4), ...`` before giving up.  Asymptotic series
    stop at their smallest term.
    """

    L: float = 4.0
    safety_cap: int = 400
    tol: float = 1e-13

    def __post_init__(self) -> None:
        if not self.L > 1.0:
            raise ValueError(f"Adaptive truncation needs L > 1, got {self.L!r}")
        if int(self.safety_cap) != self.safety_cap or self.safety_cap < 1:
            raise ValueError(f"safety_cap must be a positive integer, got {self.safety_cap!r}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")


TruncationPolicy = Fixed | Adaptive


@dataclass(frozen=True)
class SeriesEval:
    value: float
    order_used: int
    regime: Regime
    zone: Zone


def char_fn(z, params: StableParams):
    """Characteristic function at ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=float)
    c = c_from_c_tilde(params)
    skew = params.beta * math.tan(math.pi * params.alpha / 2.0)
    az = np.abs(z)
    with np.errstate(divide="ignore"):
        expo = -c * az**params.alpha * (1.0 - 1j * skew * np.sign(z)) + 1j * params.tau * z
    out = np.exp(expo)
    return out[()] if out.ndim == 0 else out


# -- coefficients -----------------------------------------------------------


def series_angle(params: StableParams, kind: str, positive: bool = True) -> float:
    """Fraction ``s`` such that the n-th term carries ``sin(pi * n * s)``.

    ``kind`` is ``"central"`` or ``"tail"``; ``positive=False`` gives the
    reflected (left-hand) angle.
    """
    a = params.alpha
    b = series_skew(a, params.beta)
    if not positive:
        b = -b
    if a > 1.0:
        rho = (1.0 - b * (2.0 - a) / a) / 2.0
    else:
        rho = (1.0 + b) / 2.0
    if kind == "central":
        return rho
    if kind == "tail":
        return rho * a
    raise ValueError(f"unknown series kind {kind!r}")


def central_coefficients(alpha: float, n: np.ndarray) -> np.ndarray:
    """log(Gamma(n / alpha + 1) / n!)"""
    return gammaln(n / alpha + 1.0) - gammaln(n + 1.0)


def tail_coefficients(alpha: float, n: np.ndarray) -> np.ndarray:
    """log(Gamma(n alpha + 1) / n!)"""
    return gammaln(n * alpha + 1.0) - gammaln(n + 1.0)


def _alternating_sines(n: np.ndarray, angle: float) -> np.ndarray:
    return np.where(n % 2 == 1, 1.0, -1.0) * np.sin(math.pi * n * angle)


# -- truncation orders ------------------------------------------------------


def _log_lemma_term(n: int, M: float, L: float, alpha: float) -> float:
    """log of Gamma(n/alpha+1)/n! * M^(n-1) * L^n; <= 0 iff the inequality holds."""
    if n < 10**6:
        g = float(gammaln(n / alpha + 1.0) - gammaln(n + 1.0))
    else:
        with mpmath.workdps(40):
            g = float(mpmath.loggamma(mpmath.mpf(n) / alpha + 1) - mpmath.loggamma(n + 1))
    return g + (n - 1) * math.log(M) + n * math.log(L)


def lemma_holds(n: int, M: float, L: float, alpha: float) -> bool:
    return _log_lemma_term(n, M, L, alpha) <= 0.0


def truncation_order(
    M: float, L: float, alpha: float, *, window: int = 200, cap: int | None = None
) -> int:
    """Smallest n0 with ``Gamma(n/alpha+1)/n! * M^(n-1) <= L^-n`` on ``[n0, n0 + window]``.

    The log of the left side minus the right side is concave in n, so the
    admissible set is a half line; it is located by doubling and bisection and
    then checked term by term over the window.  Raises
    :class:`TruncationError` when ``n0`` exceeds ``cap``.
    """
    if not M > 0.0:
        raise ValueError(f"M must be positive, got {M!r}")
    if not L > 1.0:
        raise ValueError(f"L must exceed 1, got {L!r}")
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (1, 2), got {alpha!r}")

    def ok(n: int) -> bool:
        return lemma_holds(n, M, L, alpha)

    def too_big(n: int) -> TruncationError:
        return TruncationError(
            f"Lemma order {n} for M={M:g}, L={L:g}, alpha={alpha:g} exceeds the cap {cap}; "
            "move the region cuts closer to tau"
        )

    # the log term is concave in n: locate its peak from the digamma slope
    log_ml = math.log(M) + math.log(L)

    def rising(n: float) -> bool:
        return float(digamma(n / alpha + 1.0) / alpha - digamma(n + 1.0)) + log_ml > 0.0

    peak = 1
    if rising(1):
        hi = 2
        while rising(hi):
            hi *= 2
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            lo, hi = (mid, hi) if rising(mid) else (lo, mid)
        peak = lo
    if ok(peak):
        n0 = 1
    else:
        lo, hi = peak, max(2 * peak, 2)
        while not ok(hi):
            if cap is not None and hi > 2 * cap:
                raise too_big(hi)
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            lo, hi = (lo, mid) if ok(mid) else (mid, hi)
        n0 = hi
    while True:
        bad = [n for n in range(n0, n0 + window + 1) if not ok(n)]
        if not bad:
            break
        n0 = bad[-1] + 1
    if cap is not None and n0 > cap:
        raise too_big(n0)
    return n0


def _rate_ladder(L: float):
    rate = L
    while rate > 1.0 + 1e-3:
        yield rate
        rate = math.sqrt(rate)


def _convergent_central_order(M: float, alpha: float, policy: Adaptive, scale: float = 1.0) -> int:
    """Certified order for the convergent central series on |u| <= M.

    For each rate on the ladder, ``n0`` is the first n after which the Lemma
    inequality holds up to the cap; concavity of the log term in n extends it
    beyond.  The order must also push the geometric remainder
    ``scale * rate^-(N+1) / (1 - 1/rate) / pi`` below ``tol``.
    """
    cap = policy.safety_cap
    n = np.arange(1, cap + 2, dtype=float)
    base = central_coefficients(alpha, n) + (n - 1.0) * math.log(max(M, 1e-12))
    best = None
    for rate in _rate_ladder(policy.L):
        log_term = base + n * math.log(rate)
        if log_term[-1] > 0.0 or log_term[-1] > log_term[-2]:
            continue
        failing = np.nonzero(log_term[:-1] > 0.0)[0]
        n0 = int(failing[-1]) + 2 if failing.size else 1
        target = policy.tol * math.pi * (1.0 - 1.0 / rate) / scale
        n_tol = max(1, math.ceil(-math.log(target) / math.log(rate)) - 1)
        order = max(n0, n_tol)
        if order <= cap and (best is None or order < best):
            best = order
    if best is None:
        raise TruncationError(
            f"central series for alpha={alpha:g} on |u| <= {M:g} needs more than "
            f"{cap} terms; move the region cuts closer to tau"
        )
    return best


def _asymptotic_order(log_env: np.ndarray) -> int:
    """Stop at the smallest term (optimal truncation)."""
    return int(np.argmin(log_env)) + 1


def _convergent_order(log_env: np.ndarray, tol: float, cap: int) -> int:
    peak = int(np.argmax(log_env))
    below = np.nonzero(log_env[peak:] <= math.log(tol) + log_env[0])[0]
    if below.size == 0:
        raise TruncationError(f"series has not converged within {cap} terms")
    return peak + int(below[0]) + 1


def central_order(u_max: float, params: StableParams, policy: TruncationPolicy) -> int:
    """Number of central-series terms used on ``|u| <= u_max``."""
    if isinstance(policy, Fixed):
        return policy.n
    if params.regime is Regime.UPPER:
        return _convergent_central_order(u_max, params.alpha, policy)
    if u_max == 0.0:
        return 1
    n = np.arange(1, policy.safety_cap + 1, dtype=float)
    return _asymptotic_order(central_coefficients(params.alpha, n) + (n - 1) * math.log(u_max))


def tail_order(u_min: float, params: StableParams, policy: TruncationPolicy) -> int:
    """Number of tail-series terms used on ``|u| >= u_min``."""
    if isinstance(policy, Fixed):
        return policy.n
    n = np.arange(1, policy.safety_cap + 1, dtype=float)
    log_env = tail_coefficients(params.alpha, n) - (n * params.alpha + 1.0) * math.log(u_min)
    if params.regime is Regime.UPPER:
        return _asymptotic_order(log_env)
    return _convergent_order(log_env, policy.tol, policy.safety_cap)


# -- series -----------------------------------------------------------------


def _check_order(N: int) -> int:
    if int(N) != N or N < 1:
        raise ValueError(f"truncation order must be an integer >= 1, got {N!r}")
    return int(N)


def central_series(u: float, params: StableParams, N: int) -> float:
    """Central expansion truncated after ``N`` terms."""
    N = _check_order(N)
    angle = series_angle(params, "central", positive=u >= 0.0)
    n = np.arange(1, N + 1, dtype=float)
    signs = _alternating_sines(n, angle)
    if u == 0.0:
        return float(signs[0] * math.exp(central_coefficients(params.alpha, n[:1])[0]) / math.pi)
    with np.errstate(over="ignore", invalid="ignore"):
        mags = np.exp(central_coefficients(params.alpha, n) + (n - 1) * math.log(abs(u)) - _LOG_PI)
        return float(np.sum(signs * mags))


def tail_series(u: float, params: StableParams, N: int) -> float:
    """Tail expansion truncated after ``N`` terms; ``u`` must be non-zero."""
    N = _check_order(N)
    if u == 0.0:
        raise ValueError("tail series is singular at u=0")
    angle = series_angle(params, "tail", positive=u > 0.0)
    n = np.arange(1, N + 1, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        mags = np.exp(
            tail_coefficients(params.alpha, n) - (n * params.alpha + 1.0) * math.log(abs(u)) - _LOG_PI
        )
        return float(np.sum(_alternating_sines(n, angle) * mags))


def density(
    u: float,
    params: StableParams,
    region: RegionConfig | None = None,
    policy: TruncationPolicy | None = None,
) -> SeriesEval:
    """Standardized density at ``u`` from whichever series owns its zone.

    ``region`` gives the cuts in data units; by default they are placed at
    :func:`balanced_cut` scale units either side of tau.
    """
    policy = Adaptive() if policy is None else policy
    if region is None:
        cut = balanced_cut(params.alpha)
        right = left = cut
    else:
        right, left = region.ratios(params)
    if u >= right:
        zone = Zone.RIGHT_TAIL
    elif u <= -left:
        zone = Zone.LEFT_TAIL
    else:
        zone = Zone.CENTRAL
    if zone is Zone.CENTRAL:
        N = central_order(abs(u), params, policy)
        value = central_series(u, params, N)
    else:
        N = tail_order(abs(u), params, policy)
        value = tail_series(u, params, N)
    if not math.isfinite(value):
        raise TruncationError(f"series value at u={u!r} is not finite with {N} terms")
    return SeriesEval(value=value, order_used=N, regime=params.regime, zone=zone)


def _rounding_error(log_coef: np.ndarray, log_pow: np.ndarray) -> np.ndarray:
    """log of the summed rounding error of terms exp(log_coef + log_pow).

    Each term inherits a relative error of about eps times the size of the
    exponents it was built from.
    """
    width = np.abs(log_coef) + np.abs(log_pow) + 1.0
    return math.log(_EPS) + np.logaddexp.reduce(log_coef + log_pow + np.log(width), axis=0)


@lru_cache(maxsize=256)
def balanced_cut(alpha: float, cap: int = 400, tol: float = 1e-13) -> float:
    """Distance from tau (in scale units) where the two expansions trade places.

    Beyond the cut the tail series is used, inside it the central series.  Of
    the two, the asymptotic one (tail for alpha > 1, central for alpha < 1)
    leaves an error of about sqrt(N) times its smallest term, while the
    convergent one loses accuracy to cancellation.  The cut minimises the
    larger of the two estimates, subject to the convergent series settling
    within ``cap`` terms.  For alpha > 1 it is kept above 1 so the tail
    remainders decay.
    """
    Regime.of(alpha)
    n = np.arange(1, cap + 1, dtype=float)[:, None]
    grid = np.exp(np.linspace(math.log(1e-3), math.log(40.0), 600))[None, :]
    logs = np.log(grid)
    c_coef, c_pow = central_coefficients(alpha, n), (n - 1) * logs
    t_coef, t_pow = tail_coefficients(alpha, n), -(n * alpha + 1) * logs
    if alpha > 1.0:
        asym = t_coef + t_pow
        conv_coef, conv_pow = c_coef, c_pow
        rate = (c_coef + c_pow + n * math.log(1.0 + 1e-3))
        settled = (rate[-1] <= math.log(tol))
    else:
        asym = c_coef + c_pow
        conv_coef, conv_pow = t_coef, t_pow
        conv = t_coef + t_pow
        settled = conv[-1] <= math.log(tol) + conv[0]
    n_star = asym.argmin(axis=0) + 1.0
    asym_err = asym.min(axis=0) + 0.5 * np.log(n_star)
    conv_err = _rounding_error(conv_coef, conv_pow)
    err = np.maximum(asym_err, conv_err)
    err[~settled] = np.inf
    if alpha > 1.0:
        err[grid[0] <= 1.0] = np.inf
    if not np.isfinite(err).any():
        raise TruncationError(f"no usable cut for alpha={alpha:g}")
    return float(grid[0, int(np.argmin(err))])


# -- oracle -----------------------------------------------------------------


def oracle_density(u: float, params: StableParams, tol: float = 1e-10) -> float:
    """Standardized density by Fourier inversion of the characteristic function.

    Evaluates ``(1/pi) * int_0^inf exp(-l z^a) cos(l k z^a - u z) dz`` where
    ``l = c / c_tilde^alpha`` and ``k = beta tan(pi alpha / 2)``.  Moderate
    ``|u|`` uses adaptive quadrature on a truncated range split into
    half-periods; large ``|u|`` integrates the first few periods that way and
    the rest with QUADPACK's oscillatory-weight routine on geometric panels.
    Raises :class:`OracleError` if the error estimate exceeds ``tol``.
    """
    a = params.alpha
    lam = c_from_c_tilde(params) / params.c_tilde**a
    kappa = params.beta * math.tan(math.pi * a / 2.0)
    # exp(-46) is below double-precision relevance for densities of order 1e-20
    z_end = (46.0 / lam) ** (1.0 / a)

    def fc(z):
        return math.exp(-lam * z**a) * math.cos(lam * kappa * z**a)

    def fs(z):
        return math.exp(-lam * z**a) * math.sin(lam * kappa * z**a)

    w = abs(u)
    # |p(u)| can never exceed the integral of the modulus of the integrand;
    # at u = 0 with beta = 0 the two coincide, hence the rounding slack
    bound = math.gamma(1.0 / a + 1.0) / lam ** (1.0 / a) * (1.0 + 1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if w * z_end <= 400.0 * math.pi:
            value, err = _oracle_direct(u, lam, kappa, a, z_end)
        else:
            # a few periods directly, where z^alpha has its cusp, then QAWO;
            # QUADPACK occasionally returns garbage, so retry from a later split
            for periods in (8, 24, 72):
                z_split = min(z_end, 2.0 * periods * math.pi / w)
                head, head_err = _oracle_direct(u, lam, kappa, a, z_split)
                tail, tail_err = _oracle_fourier(fc, fs, u, z_split, z_end)
                value, err = head + tail, head_err + tail_err
                if math.isfinite(value) and abs(value) <= bound and err <= tol:
                    break
    if not (math.isfinite(value) and abs(value) <= bound and err <= tol):
        raise OracleError(f"quadrature failed at u={u!r} for {params} (error estimate {err:.2e})")
    return value / math.pi


def _oracle_direct(u, lam, kappa, a, z_end):
    # substitute t = z^alpha, which tames the behaviour of z^alpha at the origin
    t_end = z_end**a
    inv = 1.0 / a

    def g(t):
        return math.exp(-lam * t) * math.cos(lam * kappa * t - u * t**inv) * t ** (inv - 1.0) * inv

    edges = {0.0, t_end, min(1.0, t_end)}
    if u != 0.0:
        # zeros of the phase u z, mapped to t
        n_half = math.floor(z_end * abs(u) / math.pi)
        edges.update((np.arange(1, n_half + 1) * math.pi / abs(u)) ** a)
    edges = sorted(e for e in edges if e <= t_end)
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            v, e = integrate.quad(g, lo, hi, limit=200, epsabs=1e-15, epsrel=1e-13)
            total += v
            err += e
    return total, err


def _oracle_fourier(fc, fs, u, start, stop):
    # QUADPACK's QAWO (Clenshaw-Curtis moments for the cos / sin weight) on
    # geometric panels, so each panel sees an amplitude of a single scale
    if stop <= start:
        return 0.0, 0.0
    w = abs(u)
    n_panels = max(1, math.ceil(math.log2(stop / start)))
    edges = np.geomspace(start, stop, n_panels + 1)
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        for f, weight, sign in ((fc, "cos", 1.0), (fs, "sin", math.copysign(1.0, u))):
            v, e, *_ = integrate.quad(
                f, lo, hi, weight=weight, wvar=w, limit=200, epsabs=1e-16, epsrel=1e-12, full_output=1
            )
            # cos(l k z^a - u z) = cos(l k z^a) cos(u z) + sin(l k z^a) sin(u z)
            total += sign * v
            err += e
    return total, err
