"""Real-domain special functions: log-gamma, log-beta, incomplete beta, F tail.

``log_gamma`` uses the 14-term Lanczos approximation with ``g = 671/128``
(Numerical Recipes, 3rd ed.). Measured against 50-digit references the
absolute error is below 2e-15 for z in [0.5, 2.5] and the relative error
is below 5e-15 elsewhere on (0, 1e12]; see README for the table.
"""

from __future__ import annotations

import math

from .errors import ConvergenceError, DomainError

__all__ = [
    "log_gamma",
    "log_beta",
    "reg_inc_beta",
    "f_upper_tail",
    "f_inverse_upper_tail",
]

_LANCZOS_G = 5.24218750000000000  # 671/128 - 1/2, folded into the shift
_LANCZOS_COF = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)
_SQRT_2PI = 2.5066282746310005

CF_MAX_ITER = 300
CF_TOL = 1e-14
_FPMIN = 1e-300


def log_gamma(z: float) -> float:
    """Natural log of the gamma function for real ``z > 0``."""
    if not math.isfinite(z) or z <= 0.0:
        raise DomainError(f"log_gamma requires a finite z > 0, got {z!r}")
    z = float(z)
    tmp = z + _LANCZOS_G
    tmp = (z + 0.5) * math.log(tmp) - tmp
    ser = 0.999999999999997092
    y = z
    for c in _LANCZOS_COF:
        y += 1.0
        ser += c / y
    return tmp + math.log(_SQRT_2PI * ser / z)


def log_beta(a: float, b: float) -> float:
    """Natural log of the Beta function B(a, b)."""
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0.0 or b <= 0.0:
        raise DomainError(f"log_beta requires a > 0 and b > 0, got a={a!r}, b={b!r}")
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def _beta_cf(a: float, b: float, t: float) -> float:
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * t / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * t / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * t / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= CF_TOL:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge in {CF_MAX_ITER} "
        f"iterations (t={t!r}, a={a!r}, b={b!r})"
    )


def reg_inc_beta(t: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_t(a, b).

    Evaluated by continued fraction on whichever side of
    ``(a + 1) / (a + b + 2)`` converges fastest, using
    ``I_t(a, b) = 1 - I_{1-t}(b, a)`` for the upper side.

    Raises
    ------
    DomainError
        If ``t`` is outside [0, 1] or a shape parameter is not positive.
    ConvergenceError
        If the continued fraction needs more than 300 terms.
    """
    if not math.isfinite(t) or t < 0.0 or t > 1.0:
        raise DomainError(f"reg_inc_beta requires 0 <= t <= 1, got {t!r}")
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0.0 or b <= 0.0:
        raise DomainError(f"reg_inc_beta requires a > 0 and b > 0, got a={a!r}, b={b!r}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0
    log_front = a * math.log(t) + b * math.log1p(-t) - log_beta(a, b)
    if t < (a + 1.0) / (a + b + 2.0):
        value = math.exp(log_front) * _beta_cf(a, b, t) / a
    else:
        value = 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - t) / b
    return min(1.0, max(0.0, value))


def _check_df(x: float, y: float) -> None:
    if not (math.isfinite(x) and math.isfinite(y)) or x <= 0 or y <= 0:
        raise DomainError(f"degrees of freedom must be positive, got x={x!r}, y={y!r}")


def f_upper_tail(f: float, x: float, y: float) -> float:
    """P(F >= f) for an F distribution with ``x`` and ``y`` degrees of freedom."""
    _check_df(x, y)
    if math.isnan(f) or f < 0.0:
        raise DomainError(f"F statistic must be >= 0, got {f!r}")
    if math.isinf(f):
        return 0.0
    return reg_inc_beta(y / (y + x * f), y / 2.0, x / 2.0)


def f_inverse_upper_tail(p: float, x: float, y: float, tol: float = 1e-12) -> float:
    """F value whose upper-tail probability equals ``p``, found by bisection.

    Stops once the tail probability is within ``tol`` (absolute) of ``p`` or
    the bracket can no longer be narrowed in double precision.
    """
    _check_df(x, y)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    lo, hi = 0.0, 1.0
    while f_upper_tail(hi, x, y) > p:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise ConvergenceError(f"could not bracket F for p={p!r}")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        tail = f_upper_tail(mid, x, y)
        if abs(tail - p) <= tol:
            return mid
        if tail > p:
            lo = mid
        else:
            hi = mid
