"""Foundation special functions: log-gamma, real/complex error functions,
confluent hypergeometric series, probabilists' Hermite polynomials and the
regularized incomplete gamma function.

Everything here is a pure function; the heavy lifting for real arguments is
delegated to scipy's well-tested implementations (Faddeeva-based complex erf,
erfcx, gammaln), while the series evaluators implement explicit tolerance
control and honest convergence reporting that the kernel layer builds on.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .common import ConvergenceError

__all__ = [
    "SeriesTolerance",
    "SeriesResult",
    "sum_series",
    "ln_gamma",
    "erf_complex",
    "erfc_real",
    "erfcx_real",
    "hyp1f1",
    "hyp0f1",
    "hermite_he",
    "hermite_he_iter",
    "reg_lower_gamma",
]


@dataclass(frozen=True)
class SeriesTolerance:
    """Termination policy for power-series evaluation.

    A series stops once the last ``consecutive`` terms are all below
    ``rel_tol * |partial sum| + abs_tol``; several of the series used here
    alternate in blocks, so a single small term is not proof of convergence.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-300
    max_terms: int = 10000
    consecutive: int = 3

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_TOL = SeriesTolerance()


@dataclass(frozen=True)
class SeriesResult:
    """Value of a summed series plus convergence diagnostics.

    ``max_abs_term / |value|`` is the cancellation ratio used by callers to
    inflate error estimates or switch evaluation strategy.
    """

    value: complex | float
    terms_used: int
    max_abs_term: float
    last_abs_term: float

    @property
    def cancellation(self) -> float:
        v = abs(self.value)
        if v == 0.0:
            return math.inf if self.max_abs_term > 0 else 1.0
        return max(1.0, self.max_abs_term / v)

    @property
    def est_error(self) -> float:
        # rounding amplified by cancellation, plus the final neglected term
        return 2e-16 * self.max_abs_term + self.last_abs_term


def sum_series(terms, tol: SeriesTolerance = DEFAULT_TOL, name: str = "series") -> SeriesResult:
    """Sum an iterable of terms under the stopping rule of ``tol``.

    Raises ConvergenceError (carrying the partial sum and a crude remainder
    bound) if ``tol.max_terms`` is exhausted first.
    """
    total = 0.0
    max_abs = 0.0
    small_run = 0
    last_abs = 0.0
    k = 0
    for t in terms:
        total = total + t
        last_abs = abs(t)
        if last_abs > max_abs:
            max_abs = last_abs
        k += 1
        if last_abs <= tol.rel_tol * abs(total) + tol.abs_tol:
            small_run += 1
            if small_run >= tol.consecutive:
                return SeriesResult(total, k, max_abs, last_abs)
        else:
            small_run = 0
        if k >= tol.max_terms:
            raise ConvergenceError(
                f"{name}: no convergence in {tol.max_terms} terms",
                partial=total,
                bound=last_abs * tol.max_terms,
                terms_used=k,
            )
    return SeriesResult(total, k, max_abs, last_abs)


def ln_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"ln_gamma requires x > 0, got {x}")
    return float(_sp.gammaln(x))


def _erf_quadrant(z: complex) -> complex:
    # scipy's erf uses the Faddeeva rational/continued-fraction algorithm,
    # accurate on the whole plane; called here with Re z >= 0, Im z >= 0.
    return complex(_sp.erf(z))


def erf_complex(z: complex) -> complex:
    """Principal error function for complex argument.

    Arguments are canonicalized into the first quadrant and mapped back via
    erf(-z) = -erf(z) and erf(conj z) = conj(erf z), so both symmetries hold
    exactly.  Accuracy is best in the sector |Im z| <= |Re z|; callers that
    stray far outside it (where erf grows like exp(Im(z)^2)) get the honest
    but condition-limited Faddeeva value.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"erf_complex requires finite argument, got {z}")
    negate = False
    conjugate = False
    if z.real < 0.0 or (z.real == 0.0 and z.imag < 0.0):
        z = -z
        negate = True
    if z.imag < 0.0:
        z = z.conjugate()
        conjugate = True
    w = _erf_quadrant(z)
    if conjugate:
        w = w.conjugate()
    if negate:
        w = -w
    return w


def erfc_real(x: float) -> float:
    """Complementary error function for real x."""
    if not math.isfinite(x):
        raise ValueError("erfc_real requires finite argument")
    return float(_sp.erfc(x))


def erfcx_real(x: float) -> float:
    """Scaled complementary error function exp(x^2) erfc(x), overflow-safe."""
    if not math.isfinite(x):
        raise ValueError("erfcx_real requires finite argument")
    return float(_sp.erfcx(x))


def _hyp1f1_series(a: float, b: float, x: float, tol: SeriesTolerance) -> float:
    def terms():
        t = 1.0
        k = 0
        while True:
            yield t
            t *= (a + k) * x / ((b + k) * (k + 1.0))
            k += 1
            # terminating polynomial when a is a non-positive integer
            if t == 0.0:
                yield 0.0
                return

    return sum_series(terms(), tol, name="hyp1f1").value


def hyp1f1(a: float, b: float, x: float, tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Kummer confluent hypergeometric function 1F1(a; b; x), real arguments.

    The defining series is used where its terms keep one sign; for negative x
    Kummer's transformation 1F1(a,b,x) = e^x 1F1(b-a,b,-x) moves the
    evaluation to a positive argument, avoiding the alternating-series
    cancellation.
    """
    if b <= 0 and b == int(b):
        raise ValueError(f"hyp1f1 pole: b={b} is a non-positive integer")
    if x == 0.0:
        return 1.0
    if x < 0.0 and b - a > 0:
        return math.exp(x) * _hyp1f1_series(b - a, b, -x, tol)
    return _hyp1f1_series(a, b, x, tol)


def hyp0f1(b: float, x: float, tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Confluent limit function 0F1(; b; x) = sum x^k / ((b)_k k!).

    For b >= 1/2 and x <= 0 the value is bounded by 1 in magnitude (it is a
    rescaled Bessel J); large negative arguments are therefore delegated to
    the Bessel-function form, which is immune to the alternation of the raw
    series.
    """
    if b <= 0 and b == int(b):
        raise ValueError(f"hyp0f1 pole: b={b} is a non-positive integer")
    if x == 0.0:
        return 1.0
    if x < -25.0:
        # 0F1(b, -u^2/4) = Gamma(b) (u/2)^{1-b} J_{b-1}(u)
        u = 2.0 * math.sqrt(-x)
        return float(math.exp(_sp.gammaln(b) - (b - 1.0) * math.log(u / 2.0)) * _sp.jv(b - 1.0, u))

    def terms():
        t = 1.0
        k = 0
        while True:
            yield t
            t *= x / ((b + k) * (k + 1.0))
            k += 1

    return sum_series(terms(), tol, name="hyp0f1").value


def hermite_he_iter(z):
    """Yield He_0(z), He_1(z), ... via the three-term recurrence.

    With integer or Fraction ``z`` the arithmetic stays exact.
    """
    h_prev = None
    h = z**0  # 1 in the arithmetic of z
    k = 0
    while True:
        yield h
        h_prev, h = h, z * h - k * (h_prev if h_prev is not None else 0)
        k += 1


def hermite_he(k: int, z):
    """Probabilists' Hermite polynomial He_k(z)."""
    if k < 0 or k != int(k):
        raise ValueError(f"hermite_he requires integer k >= 0, got {k}")
    it = hermite_he_iter(z)
    for _ in range(int(k)):
        next(it)
    return next(it)


def _reg_lower_gamma_cf(a: float, z: complex) -> complex:
    # Lentz continued fraction for the upper incomplete gamma, Re z > 0
    tiny = 1e-300
    b0 = z + 1.0 - a
    C = 1.0 / tiny
    D = 1.0 / (b0 if b0 != 0 else tiny)
    h = D
    for i in range(1, 600):
        an = -i * (i - a)
        b0 = b0 + 2.0
        D = an * D + b0
        if D == 0:
            D = tiny
        C = b0 + an / C
        if C == 0:
            C = tiny
        D = 1.0 / D
        delta = D * C
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    # Q(a, z) = exp(-z + a ln z - lnGamma(a)) * h
    lnq = -z + a * cmath.log(z) - _sp.gammaln(a)
    return 1.0 - cmath.exp(lnq) * h


def reg_lower_gamma(beta: float, z, tol: SeriesTolerance = DEFAULT_TOL):
    """Regularized lower incomplete gamma P(beta, z) along the principal path.

    Real z >= 0 gives a real value in [0, 1); complex arguments use the
    entire-series or continued-fraction form depending on the region.
    """
    if not beta > 0:
        raise ValueError(f"reg_lower_gamma requires beta > 0, got {beta}")
    was_real = not isinstance(z, complex)
    zc = complex(z)
    if was_real and zc.real < 0:
        raise ValueError("reg_lower_gamma: real argument must be >= 0")
    if zc == 0:
        return 0.0 if was_real else 0.0 + 0.0j
    if was_real:
        return float(_sp.gammainc(beta, zc.real))
    if zc.real >= 0 and abs(zc) > 40.0 + abs(beta):
        return _reg_lower_gamma_cf(beta, zc)
    if zc.real >= 0:
        # P(a,z) = z^a e^{-z} sum_k z^k / Gamma(a+k+1); positive coefficients
        def terms():
            t = cmath.exp(beta * cmath.log(zc) - zc - _sp.gammaln(beta + 1.0))
            k = 0
            while True:
                yield t
                t *= zc / (beta + k + 1.0)
                k += 1

        return sum_series(terms(), tol, name="reg_lower_gamma").value
    # Re z < 0: Kummer-flipped form, series argument -z has positive real part
    def terms():
        t = cmath.exp(beta * cmath.log(zc) - _sp.gammaln(beta + 1.0))
        k = 0
        while True:
            yield t
            t *= (beta + k) * (-zc) / ((beta + k + 1.0) * (k + 1.0))
            k += 1

    return sum_series(terms(), tol, name="reg_lower_gamma").value
