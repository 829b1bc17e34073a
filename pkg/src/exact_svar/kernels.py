"""Core kernel functions for the sample-variance distribution integrals.

Two families live here:

* ``m_alpha`` -- the moment-type integral
  M_a(z) = Gamma(a)^-1 * int_0^inf exp(-x^2) x^(a-1) exp(xz) dx,
  the per-variable building block of the gamma-parent Laplace transform,
  with series / quadrature / asymptotic evaluation regimes and an
  overflow-safe logarithmic form.

* ``k_beta`` -- the inverse-Laplace kernel K_b(r, z) whose product with
  x^(b-1) inverts t^-b phi(z + t^-1/2)/phi(z).  Several independent
  representations are implemented and cross-validated: the Hermite series,
  the 0F1 series, a circular contour integral built on the auxiliary entire
  function ``w_beta``, a Bessel-type integral over [0, pi/2], and a rotated
  Hankel-path integral that stays well conditioned where the series lose
  all their digits to cancellation (large r*|z| with z > 0).

Every evaluator reports an honest absolute error estimate; the automatic
method selection escalates to arbitrary precision when the cancellation
monitor says double precision is not enough.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

import mpmath as mp
import numpy as np
from scipy import integrate as _si
from scipy import special as _sp

from .common import ConvergenceError, NumericalError
from .specfun import DEFAULT_TOL, SeriesTolerance, sum_series

__all__ = [
    "KernelMethod",
    "KernelValue",
    "EvalConfig",
    "DEFAULT_CONFIG",
    "m_alpha",
    "m_alpha_integer",
    "log_m_alpha",
    "k_beta",
    "k_beta_batch",
    "w_beta",
    "k_beta_tail_bound",
    "k_beta_majorant",
]

_LN_SQRT_PI = 0.5 * math.log(math.pi)
_SQRT_PI = math.sqrt(math.pi)


class KernelMethod(str, Enum):
    """Evaluation strategy selector for ``k_beta``."""

    HERMITE_SERIES = "hermite_series"
    ZERO_F_ONE_SERIES = "zero_f_one_series"
    CONTOUR = "contour"
    BESSEL_INTEGRAL = "bessel_integral"
    HANKEL_RAY = "hankel_ray"
    MP_SERIES = "mp_series"
    AUTO = "auto"


@dataclass(frozen=True)
class KernelValue:
    """A kernel evaluation: value, absolute error estimate, method, work."""

    value: float
    est_error: float
    method: str
    terms_used: int = 0


@dataclass(frozen=True)
class EvalConfig:
    """Numerical knobs shared by the kernel and distribution evaluators.

    ``z_cut_pos=None`` lets the gamma-parent quadrature pick its own
    truncation point from the kernel decay estimates (never less than the
    ``max(12, 4n)`` default window).
    """

    quad_abs_tol: float = 1e-9
    quad_rel_tol: float = 1e-8
    z_cut_neg: float = -12.0
    z_cut_pos: float | None = None
    series: SeriesTolerance = field(default_factory=SeriesTolerance)
    contour_rho: float = 1.0

    def __post_init__(self):
        if not (self.quad_abs_tol > 0 and self.quad_rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if not self.z_cut_neg < 0:
            raise ValueError("z_cut_neg must be negative")
        if self.z_cut_pos is not None and not self.z_cut_pos > 0:
            raise ValueError("z_cut_pos must be positive")
        if not self.contour_rho > 0:
            raise ValueError("contour_rho must be positive")


DEFAULT_CONFIG = EvalConfig()


# ---------------------------------------------------------------------------
# M_alpha
# ---------------------------------------------------------------------------


def _m_alpha_series(alpha: float, z: float, tol: SeriesTolerance):
    """Power series (2 Gamma(a))^-1 sum_k Gamma((a+k)/2) z^k / k!.

    Split into even/odd sub-series so the Gamma ratio recurrences are exact.
    All terms are positive for z >= 0; for z < 0 the cancellation is bounded
    by exp(z^2/4), which keeps this route below ~6 lost digits for z >= -6.
    """
    lg_a = _sp.gammaln(alpha)
    t_even = math.exp(_sp.gammaln(alpha / 2.0) - lg_a - math.log(2.0))
    t_odd = math.exp(_sp.gammaln((alpha + 1.0) / 2.0) - lg_a - math.log(2.0)) * z
    z2 = z * z

    def terms():
        te, to = t_even, t_odd
        j = 0
        while True:
            yield te
            yield to
            te *= (alpha / 2.0 + j) * z2 / ((2 * j + 1.0) * (2 * j + 2.0))
            to *= ((alpha + 1.0) / 2.0 + j) * z2 / ((2 * j + 2.0) * (2 * j + 3.0))
            j += 1

    return sum_series(terms(), tol, name="m_alpha series")


def _m_alpha_asymptotic_neg(alpha: float, z: float):
    """Watson-lemma expansion for z -> -inf.

    Returns (log M, relative error estimate) or None when the expansion
    cannot reach near machine precision at this (alpha, z).
    """
    az = -z
    s = 0.0
    term = 1.0
    best = math.inf
    j = 0
    while j < 400:
        s += term
        nxt = term * (alpha + 2 * j) * (alpha + 2 * j + 1) / ((j + 1.0) * az * az)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        best = abs(term)
        j += 1
    if s <= 0 or not best < 1e-14 * abs(s):
        return None
    return math.log(s) - alpha * math.log(az), best / abs(s)


def _m_alpha_quad_neg(alpha: float, z: float):
    """Adaptive quadrature of the defining integral for z <= -5.

    The algebraic endpoint weight x^(alpha-1) is handled by QAWS; the
    upper limit is cut where exp(-x^2+xz) is far below machine epsilon.
    Returns (log M, relative error estimate).
    """
    a_up = min(12.0, 3.0 + 90.0 / abs(z))
    val, err = _si.quad(
        lambda x: math.exp(-x * x + x * z),
        0.0,
        a_up,
        weight="alg",
        wvar=(alpha - 1.0, 0.0),
        limit=200,
        epsabs=0.0,
        epsrel=1e-13,
    )
    if val <= 0:
        raise NumericalError("m_alpha quadrature returned non-positive value", estimate=val)
    return math.log(val) - _sp.gammaln(alpha), err / val


def _m_alpha_remainder_pos(alpha: float, z: float):
    """R(z) = M(z) exp(-z^2/4) for z > 0 via the shifted-Gaussian integral.

    R = Gamma(a)^-1 int_{-z/2}^inf exp(-v^2) (z/2+v)^(a-1) dv; positive,
    smooth, and free of the exp(z^2/4) scale.  Returns (log R, rel err).
    """
    half = z / 2.0
    lg_a = _sp.gammaln(alpha)
    if half >= 15.0:
        # 96-point Gauss-Hermite never reaches the truncated endpoint
        nodes, weights = np.polynomial.hermite.hermgauss(96)
        base = np.maximum(half + nodes, 0.0)
        vals = weights * base ** (alpha - 1.0)
        total = float(vals.sum())
        return math.log(total) - lg_a, 1e-14
    # singular piece on [0, z/2] plus smooth piece on [0, inf)
    i1, e1 = _si.quad(
        lambda x: math.exp(-((x - half) ** 2)),
        0.0,
        half,
        weight="alg",
        wvar=(alpha - 1.0, 0.0),
        limit=200,
        epsabs=0.0,
        epsrel=1e-13,
    )
    i2, e2 = _si.quad(
        lambda v: math.exp(-v * v) * (half + v) ** (alpha - 1.0),
        0.0,
        np.inf,
        limit=200,
        epsabs=0.0,
        epsrel=1e-13,
    )
    total = i1 + i2
    if total <= 0:
        raise NumericalError("m_alpha remainder quadrature failed", estimate=total)
    return math.log(total) - lg_a, (e1 + e2) / total


def log_m_alpha(alpha: float, z: float, cfg: EvalConfig = DEFAULT_CONFIG) -> float:
    """ln M_alpha(z), overflow-safe for any real z.

    For z beyond the series range the dominant exp(z^2/4) factor is split
    off analytically, so (M_alpha)^n products can be assembled in log space.
    """
    if not alpha > 0:
        raise ValueError(f"m_alpha requires alpha > 0, got {alpha}")
    if not math.isfinite(z):
        raise ValueError("log_m_alpha requires finite z")
    if z > 6.0:
        ln_r, _ = _m_alpha_remainder_pos(alpha, z)
        return z * z / 4.0 + ln_r
    if z <= -5.0:
        asym = _m_alpha_asymptotic_neg(alpha, z)
        if asym is not None:
            return asym[0]
        ln_m, _ = _m_alpha_quad_neg(alpha, z)
        return ln_m
    res = _m_alpha_series(alpha, z, cfg.series)
    if res.value <= 0:
        raise NumericalError("m_alpha series lost all precision", estimate=res.value)
    return math.log(res.value)


def m_alpha(alpha: float, z: float, cfg: EvalConfig = DEFAULT_CONFIG) -> KernelValue:
    """M_alpha(z) with an error estimate; always positive.

    Values overflow the double range once z^2/4 exceeds ~709; use
    ``log_m_alpha`` in that regime.
    """
    if not alpha > 0:
        raise ValueError(f"m_alpha requires alpha > 0, got {alpha}")
    if not math.isfinite(z):
        raise ValueError("m_alpha requires finite z")
    if z > 6.0:
        ln_r, rel = _m_alpha_remainder_pos(alpha, z)
        ln_m = z * z / 4.0 + ln_r
        val = math.exp(ln_m) if ln_m < 709.0 else math.inf
        return KernelValue(val, abs(val) * (rel + 1e-15), "erfcx_decomposition")
    if z <= -5.0:
        asym = _m_alpha_asymptotic_neg(alpha, z)
        if asym is not None:
            val = math.exp(asym[0])
            return KernelValue(val, val * (asym[1] + 1e-15), "asymptotic_neg")
        ln_m, rel = _m_alpha_quad_neg(alpha, z)
        val = math.exp(ln_m)
        return KernelValue(val, val * (rel + 1e-15), "quad_neg")
    res = _m_alpha_series(alpha, z, cfg.series)
    if res.value <= 0:
        raise NumericalError("m_alpha series lost all precision", estimate=res.value)
    return KernelValue(float(res.value), res.est_error, "series", res.terms_used)


def _erfcx_family_polys(m: int):
    """Polynomial pairs (p, q) with d^j/dz^j E = p_j(z) E + q_j(z)/sqrt(pi),
    E(z) = exp(z^2/4) erfc(-z/2).  Exact rational coefficients.
    """
    from fractions import Fraction

    p = [Fraction(1)]
    q = [Fraction(0)]
    out = [(tuple(p), tuple(q))]
    for _ in range(m):
        # p' + (z/2) p ; q' + p
        dp = [k * c for k, c in enumerate(p)][1:] or [Fraction(0)]
        half_zp = [Fraction(0)] + [c / 2 for c in p]
        n = max(len(dp), len(half_zp))
        p = [(dp[i] if i < len(dp) else 0) + (half_zp[i] if i < len(half_zp) else 0) for i in range(n)]
        dq = [k * c for k, c in enumerate(q)][1:] or [Fraction(0)]
        n = max(len(dq), len(out[-1][0]))
        q = [(dq[i] if i < len(dq) else 0) + (out[-1][0][i] if i < len(out[-1][0]) else 0) for i in range(n)]
        out.append((tuple(p), tuple(q)))
    return out


_ERFCX_POLY_CACHE: dict[int, tuple] = {}


def m_alpha_integer(alpha: int, z: float) -> float:
    """M_alpha for integer alpha via the closed derivative family of
    exp(z^2/4) erfc(-z/2); exact up to the erfcx evaluation."""
    if alpha != int(alpha) or alpha < 1:
        raise ValueError(f"m_alpha_integer requires a positive integer, got {alpha}")
    alpha = int(alpha)
    if alpha not in _ERFCX_POLY_CACHE:
        _ERFCX_POLY_CACHE[alpha] = _erfcx_family_polys(alpha - 1)[alpha - 1]
    p, q = _ERFCX_POLY_CACHE[alpha]

    def horner(coeffs, x):
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * x + float(c)
        return acc

    e_val = float(_sp.erfcx(-z / 2.0))
    pref = 1.0 / (2.0 * math.gamma(alpha))
    return pref * (_SQRT_PI * horner(p, z) * e_val + horner(q, z))


# ---------------------------------------------------------------------------
# w_beta
# ---------------------------------------------------------------------------


def _w_beta_series_complex(beta: float, y: complex, tol: SeriesTolerance):
    """Entire series sum_k y^k / Gamma(beta + k/2), split even/odd."""
    t_even = complex(math.exp(-_sp.gammaln(beta)))
    t_odd = complex(math.exp(-_sp.gammaln(beta + 0.5))) * y
    y2 = y * y

    def terms():
        te, to = t_even, t_odd
        j = 0
        while True:
            yield te
            yield to
            te *= y2 / (beta + j)
            to *= y2 / (beta + 0.5 + j)
            j += 1

    return sum_series(terms(), tol, name="w_beta series")


def _w_beta_mp(beta: float, y: complex) -> complex:
    """Arbitrary-precision w_beta with self-verified precision."""
    ay = abs(y)
    dps = 25 + int(0.4343 * (ay * ay + ay)) + 10
    prev = None
    for _ in range(4):
        with mp.workdps(dps):
            yy = mp.mpc(y)
            s = mp.mpf(0)
            te = 1 / mp.gamma(beta)
            to = yy / mp.gamma(beta + mp.mpf("0.5"))
            y2 = yy * yy
            j = 0
            while True:
                s += te + to
                te *= y2 / (beta + j)
                to *= y2 / (beta + mp.mpf("0.5") + j)
                j += 1
                if abs(te) + abs(to) < (abs(s) + mp.mpf(10) ** (-dps)) * mp.mpf(10) ** (-dps + 6):
                    break
                if j > 200000:
                    raise ConvergenceError("w_beta mp series stalled", partial=complex(s))
            cur = complex(s)
        if prev is not None and abs(cur - prev) <= 1e-14 * max(abs(cur), 1e-300):
            return cur
        prev = cur
        dps += 15
    return cur


def w_beta(beta: float, y: complex, cfg: EvalConfig = DEFAULT_CONFIG) -> complex:
    """Auxiliary entire function w_beta(y) = sum_k y^k / Gamma(beta + k/2).

    Double-precision series while the cancellation monitor allows it,
    arbitrary precision beyond.
    """
    if not beta > 0:
        raise ValueError(f"w_beta requires beta > 0, got {beta}")
    y = complex(y)
    if abs(y) <= 3.2:
        res = _w_beta_series_complex(beta, y, cfg.series)
        if res.cancellation < 1e4:
            val = res.value
            return complex(val)
    return _w_beta_mp(beta, y)


def _w_beta_closed_integer(m: int, y: float) -> float:
    """w_{1+m}(y) for integer m >= 0 from the scaled-erfc closed form."""
    e_val = float(_sp.erfcx(-y))
    if m == 0:
        return e_val
    part = sum(y**j / math.gamma(1.0 + j / 2.0) for j in range(2 * m))
    return (e_val - part) / y ** (2 * m)


def _w_beta_closed_half(y: float) -> float:
    """w_{1/2}(y) = y exp(y^2) erfc(-y) + pi^{-1/2}."""
    return y * float(_sp.erfcx(-y)) + 1.0 / _SQRT_PI


def _w_beta_closed_half_plus(m: int, y: float) -> float:
    """w_{1/2+m}(y) = y^{-1} (w_m(y) - 1/Gamma(m)), m >= 1."""
    wm = _w_beta_closed_integer(m - 1, y)
    return (wm - 1.0 / math.gamma(m)) / y


def w_beta_closed_form(beta: float, y: float) -> float:
    """Closed-form w_beta for real y at integer or half-integer beta.

    Used as an independent oracle against the power series.
    """
    if beta == 0.5:
        return _w_beta_closed_half(y)
    if beta >= 1.0 and beta == int(beta):
        return _w_beta_closed_integer(int(beta) - 1, y)
    if beta > 1.0 and (beta - 0.5) == int(beta - 0.5):
        return _w_beta_closed_half_plus(int(beta - 0.5), y)
    raise ValueError(f"no closed form for beta={beta}")


# ---------------------------------------------------------------------------
# K_beta: bounds and majorant
# ---------------------------------------------------------------------------


def k_beta_tail_bound(beta: float, x: float, z: float) -> float:
    """Rigorous bound on |K_beta(sqrt(x), z)| for z > 0, beta > 1:
    (2^beta / pi) Gamma(2 beta - 2) z^-(2 beta - 2) x^-(beta - 1).
    """
    if not beta > 1:
        raise ValueError(f"tail bound requires beta > 1, got {beta}")
    if not (x > 0 and z > 0):
        raise ValueError("tail bound requires x > 0 and z > 0")
    ln_b = (
        beta * math.log(2.0)
        - math.log(math.pi)
        + _sp.gammaln(2.0 * beta - 2.0)
        - (2.0 * beta - 2.0) * math.log(z)
        - (beta - 1.0) * math.log(x)
    )
    return math.exp(ln_b)


def k_beta_majorant(beta: float, r: float, tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Majorant series sum_k r^k / (Gamma(beta + k/2) sqrt(k!)).

    1.1 exp(z^2/4) times this bounds |K_beta(r, z)| for real z.
    """
    if r < 0:
        raise ValueError("majorant requires r >= 0")

    def terms():
        k = 0
        ln_r = math.log(r) if r > 0 else -math.inf
        while True:
            if r == 0.0 and k > 0:
                return
            ln_t = k * ln_r - _sp.gammaln(beta + k / 2.0) - 0.5 * _sp.gammaln(k + 1.0)
            yield math.exp(ln_t)
            k += 1

    return float(sum_series(terms(), tol, name="k_beta majorant").value)


# ---------------------------------------------------------------------------
# K_beta: series methods (vectorized over z)
# ---------------------------------------------------------------------------


def _k_hermite_vec(beta: float, r: float, z: np.ndarray, tol: SeriesTolerance):
    """Hermite-series K over an array of z.

    Uses the normalized recurrence h_k = He_k / sqrt(k!) (bounded by
    1.1 exp(z^2/4)) so no intermediate overflows below |z| ~ 52.
    Returns (values, est_errors, terms).
    """
    z = np.asarray(z, dtype=float)
    if r == 0.0:
        v = np.full(z.shape, math.exp(-_sp.gammaln(beta)))
        return v, np.abs(v) * 1e-16, 1
    kmax = int(min(60000, 3.0 * (1.5 * r * max(1.0, float(np.max(np.abs(z)))))** (2.0 / 3.0) + 4.0 * r ** (4.0 / 3.0) + 400))
    ln_r = math.log(r)
    total = np.zeros_like(z)
    max_abs = np.zeros_like(z)
    h_prev = np.zeros_like(z)
    h = np.ones_like(z)
    tail_small = 0
    k = 0
    while k < kmax:
        ln_c = k * ln_r - _sp.gammaln(beta + k / 2.0) - 0.5 * _sp.gammaln(k + 1.0)
        if ln_c > -740.0:
            term = h * ((-1.0) ** k * math.exp(ln_c))
            total += term
            np.maximum(max_abs, np.abs(term), out=max_abs)
            if np.all(np.abs(term) <= tol.rel_tol * np.abs(total) + 1e-280):
                tail_small += 1
                if tail_small >= tol.consecutive and k > 8:
                    break
            else:
                tail_small = 0
        # h_{k+1} = (z h_k - sqrt(k) h_{k-1}) / sqrt(k+1)
        h_prev, h = h, (z * h - math.sqrt(k) * h_prev) / math.sqrt(k + 1.0)
        k += 1
    else:
        raise ConvergenceError("hermite-series K did not converge", partial=total, terms_used=k)
    err = 2e-16 * max_abs + np.abs(total) * 1e-15
    return total, err, k


def _k_0f1_vec(beta: float, r: float, z: np.ndarray, tol: SeriesTolerance):
    """0F1-series K over an array of z; coefficients shared across z.

    K = sum_k 0F1(beta + k/2, -r^2/2) (-r z)^k / (Gamma(beta+k/2) k!).
    Reliable for r |z| up to ~30 (coefficients bounded by 1 for the
    oscillatory argument), monitored beyond.
    """
    z = np.asarray(z, dtype=float)
    block = 48
    total = np.zeros_like(z)
    max_abs = np.zeros_like(z)
    pw = np.ones_like(z)  # (-r z)^k / scaling handled in log coefficient
    arg = -r * z
    k0 = 0
    terms = 0
    while k0 < tol.max_terms:
        ks = np.arange(k0, k0 + block, dtype=float)
        f01 = _sp.hyp0f1(beta + ks / 2.0, -r * r / 2.0)
        ln_c = -_sp.gammaln(beta + ks / 2.0) - _sp.gammaln(ks + 1.0)
        done = False
        for i, k in enumerate(ks):
            c = f01[i] * math.exp(ln_c[i])
            term = c * pw
            total += term
            np.maximum(max_abs, np.abs(term), out=max_abs)
            terms += 1
            pw = pw * arg
            if not np.all(np.isfinite(pw)):
                raise ConvergenceError("0F1-series K overflow", partial=total, terms_used=terms)
            bound = math.exp(ln_c[i]) * float(np.max(np.abs(pw)))
            if k > 6 and bound <= tol.rel_tol * float(np.min(np.abs(total)) + 1e-300) + 1e-280:
                done = True
                break
        if done:
            break
        k0 += block
    err = 2e-16 * max_abs + np.abs(total) * 1e-15
    return total, err, terms


def _k_hankel_vec(beta: float, r: float, z: np.ndarray, n_fine: int = 360):
    """K for z > 0 via a rotated-path integral.

    x^(beta-1) K_beta(sqrt(x), z) is the Laplace inversion of
    t^-beta exp(-z/sqrt(t) - 1/(2t)); writing exp(-z/sqrt(t)) as the
    transform of the one-sided stable-1/2 kernel and exp(-1/(2t)) t^-beta
    as a Bessel kernel turns K into

        K = Re int_path  l_z(w) (w+1/2)^-((beta-1)/2) r^-(beta-1)
                          H1_{beta-1}(2 r sqrt(w+1/2)) dw,
        l_z(w) = z/(2 sqrt(pi)) w^-3/2 exp(-z^2/(4w)),

    where the path is a ray from the origin chosen by a minimax search so
    it passes through the saddle; the integrand magnitude then never
    exceeds the result scale and double precision suffices.

    Returns (mantissas, log_scales, mantissa_errors): value = mant*exp(log).
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z <= 0) or r <= 0:
        raise ValueError("hankel-ray method requires z > 0 and r > 0")
    nu = beta - 1.0
    ln_pref = math.log(z / (2.0 * _SQRT_PI)) - (beta - 1.0) * math.log(r) if z.size == 1 else None

    def log_integrand(w, zc):
        # without the path Jacobian
        u = 2.0 * r * np.sqrt(w + 0.5)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
            h = _sp.hankel1e(nu, u)
            lg = (
                math.log(zc / (2.0 * _SQRT_PI))
                - (beta - 1.0) * math.log(r)
                - 1.5 * np.log(w)
                - zc * zc / (4.0 * w)
                + 1j * u
                - ((beta - 1.0) / 2.0) * np.log(w + 0.5)
                + np.log(h)
            )
        return lg

    thetas = np.linspace(0.12 * np.pi, 0.47 * np.pi, 10)
    ts_rel = np.logspace(-2.5, 3.5, 56)
    mant = np.empty_like(z)
    logs = np.empty_like(z)
    errs = np.empty_like(z)
    s_fine = np.linspace(-16.0, 12.0, n_fine)
    for i, zc in enumerate(z):
        t0 = (zc * zc / (4.0 * r)) ** (2.0 / 3.0)
        W = (t0 * ts_rel)[None, :] * np.exp(1j * thetas[:, None])
        L = log_integrand(W, zc).real
        L[~np.isfinite(L)] = -np.inf
        peaks = L.max(axis=1)
        i_th = int(np.argmin(peaks))
        theta = thetas[i_th]
        t_star = t0 * ts_rel[int(np.argmax(L[i_th]))]
        t = t_star * np.exp(s_fine)
        w = t * np.exp(1j * theta)
        lg = log_integrand(w, zc) + np.log(t) + 1j * theta
        re = lg.real
        re[~np.isfinite(re)] = -np.inf
        m = float(np.max(re))
        if not np.isfinite(m):
            mant[i], logs[i], errs[i] = 0.0, 0.0, 0.0
            continue
        f = np.exp(lg - m)
        f[~np.isfinite(f)] = 0.0
        h = s_fine[1] - s_fine[0]
        val = float(np.trapezoid(f, dx=h).real)
        half = float(np.trapezoid(f[::2], dx=2 * h).real)
        l1 = float(np.trapezoid(np.abs(f), dx=h))
        mant[i] = val
        logs[i] = m
        errs[i] = abs(val - half) / 3.0 + 2e-16 * l1
    return mant, logs, errs


# ---------------------------------------------------------------------------
# K_beta: contour and Bessel-integral methods
# ---------------------------------------------------------------------------


def _k_contour(beta: float, r: float, z: float, rho: float, cfg: EvalConfig):
    """Circular contour: K = (1/2 pi) int exp(-z rho e^{i psi} - rho^2 e^{2 i psi}/2)
    w_beta((r/rho) e^{-i psi}) d psi (the phi(z) normalization cancels).

    Real z: the real part is integrated on [0, pi]; trapezoid nodes are
    doubled until two sweeps agree.
    """
    y_mod = r / rho
    cache: dict[float, complex] = {}

    def wv(psi: float) -> complex:
        key = round(psi, 15)
        if key not in cache:
            cache[key] = w_beta(beta, y_mod * cmath.exp(-1j * psi), cfg)
        return cache[key]

    def integrand(psi: float) -> float:
        g = cmath.exp(-z * rho * cmath.exp(1j * psi) - rho * rho * cmath.exp(2j * psi) / 2.0)
        return (g * wv(psi)).real

    prev = None
    n = 32
    while n <= 8192:
        psis = np.linspace(0.0, math.pi, n + 1)
        vals = np.array([integrand(p) for p in psis])
        total = float(np.trapezoid(vals, dx=math.pi / n)) / math.pi
        if prev is not None and abs(total - prev) <= cfg.series.rel_tol * 100 * max(abs(total), 1e-300):
            err = abs(total - prev) + 1e-16 * float(np.abs(vals).max())
            return total, err, n + 1
        prev = total
        n *= 2
    raise ConvergenceError("contour K did not converge under node doubling", partial=prev)


def _hyp0f2(b1: float, b2: float, x: float, tol: SeriesTolerance) -> float:
    """0F2(; b1, b2; x) series; the kernel use has x >= 0 (no cancellation)."""

    def terms():
        t = 1.0
        k = 0
        while True:
            yield t
            t *= x / ((b1 + k) * (b2 + k) * (k + 1.0))
            k += 1

    return float(sum_series(terms(), tol, name="hyp0f2").value)


def _k_bessel_integral(beta: float, r: float, z: float, cfg: EvalConfig):
    """Bessel-type representation on [0, pi/2], valid beta > 1/2:

    K = (2/sqrt(pi)) int ( 0F2(1/2, b-1/2, q)/Gamma(b-1/2)
        - r z sin(th) 0F2(3/2, b, q)/Gamma(b) ) (sin th)^(2b-2) cos(r sqrt2 cos th) dth,
    q = r^2 z^2 sin^2(th) / 4.
    """
    if not beta > 0.5:
        raise ValueError("bessel_integral requires beta > 1/2")
    g1 = math.exp(-_sp.gammaln(beta - 0.5))
    g2 = math.exp(-_sp.gammaln(beta))

    def f(th: float) -> float:
        st = math.sin(th)
        q = 0.25 * r * r * z * z * st * st
        bracket = g1 * _hyp0f2(0.5, beta - 0.5, q, cfg.series) - (r * z * st) * g2 * _hyp0f2(
            1.5, beta, q, cfg.series
        )
        return bracket * st ** (2.0 * beta - 2.0) * math.cos(r * math.sqrt(2.0) * math.cos(th))

    val, err = _si.quad(f, 0.0, math.pi / 2.0, limit=300, epsabs=1e-14, epsrel=1e-12)
    return 2.0 / _SQRT_PI * val, 2.0 / _SQRT_PI * err


def _k_beta_mp(beta: float, r: float, z: float) -> float:
    """Arbitrary-precision Hermite-series K; the last-resort oracle."""
    extra = int((z * z / 4.0 + 1.5 * r + 0.7 * (r * abs(z)) ** (2.0 / 3.0)) * 0.4343) + 30
    with mp.workdps(40 + extra):
        bb, rr, zz = mp.mpf(beta), mp.mpf(r), mp.mpf(z)
        s = mp.mpf(0)
        he_prev, he = mp.mpf(0), mp.mpf(1)
        k = 0
        while True:
            term = he * (-rr) ** k / (mp.gamma(bb + mp.mpf(k) / 2) * mp.factorial(k))
            s += term
            if k > 16 and abs(term) < abs(s) * mp.mpf(10) ** (-40) + mp.mpf(10) ** (-350):
                break
            he_prev, he = he, zz * he - k * he_prev
            k += 1
            if k > 100000:
                raise ConvergenceError("mp-series K stalled", partial=float(s))
        return float(s)


# ---------------------------------------------------------------------------
# K_beta public entry points
# ---------------------------------------------------------------------------

_AUTO_SERIES_LIMIT = 30.0  # r|z| below which the 0F1 series is trusted
_CANCEL_LIMIT = 1e6


def k_beta(
    beta: float,
    r: float,
    z: float,
    method: KernelMethod | str = KernelMethod.AUTO,
    cfg: EvalConfig = DEFAULT_CONFIG,
) -> KernelValue:
    """Kernel K_beta(r, z) by the requested strategy.

    ``auto`` applies the region rules: the 0F1 series for r|z| <= 30, the
    Hermite series for z <= 0 beyond that, and the rotated Hankel path for
    z > 0 beyond it; any series whose cancellation monitor exceeds 1e6
    escalates to arbitrary precision.
    """
    if not beta > 0:
        raise ValueError(f"k_beta requires beta > 0, got {beta}")
    if r < 0:
        raise ValueError(f"k_beta requires r >= 0, got {r}")
    method = KernelMethod(method)
    zarr = np.array([float(z)])

    if method == KernelMethod.HERMITE_SERIES:
        v, e, n = _k_hermite_vec(beta, r, zarr, cfg.series)
        return KernelValue(float(v[0]), float(e[0]), method.value, n)
    if method == KernelMethod.ZERO_F_ONE_SERIES:
        v, e, n = _k_0f1_vec(beta, r, zarr, cfg.series)
        return KernelValue(float(v[0]), float(e[0]), method.value, n)
    if method == KernelMethod.CONTOUR:
        val, err, n = _k_contour(beta, r, z, cfg.contour_rho, cfg)
        return KernelValue(val, err, method.value, n)
    if method == KernelMethod.BESSEL_INTEGRAL:
        val, err = _k_bessel_integral(beta, r, z, cfg)
        return KernelValue(val, err, method.value)
    if method == KernelMethod.HANKEL_RAY:
        m, lg, e = _k_hankel_vec(beta, r, zarr)
        return KernelValue(float(m[0] * math.exp(lg[0])), float(e[0] * math.exp(lg[0])), method.value)
    if method == KernelMethod.MP_SERIES:
        val = _k_beta_mp(beta, r, z)
        return KernelValue(val, abs(val) * 1e-13, method.value)

    # auto
    if r == 0.0:
        val = math.exp(-_sp.gammaln(beta))
        return KernelValue(val, val * 1e-16, KernelMethod.ZERO_F_ONE_SERIES.value, 1)
    if r * abs(z) <= _AUTO_SERIES_LIMIT:
        v, e, n = _k_0f1_vec(beta, r, zarr, cfg.series)
        val, err = float(v[0]), float(e[0])
        if err <= _CANCEL_LIMIT * 2e-16 * max(abs(val), 1e-300):
            return KernelValue(val, err, KernelMethod.ZERO_F_ONE_SERIES.value, n)
    if z > 0.0:
        m, lg, e = _k_hankel_vec(beta, r, zarr)
        scale = math.exp(lg[0])
        return KernelValue(float(m[0] * scale), float(e[0] * scale), KernelMethod.HANKEL_RAY.value)
    v, e, n = _k_hermite_vec(beta, r, zarr, cfg.series)
    val, err = float(v[0]), float(e[0])
    if err <= _CANCEL_LIMIT * 2e-16 * max(abs(val), 1e-300):
        return KernelValue(val, err, KernelMethod.HERMITE_SERIES.value, n)
    val = _k_beta_mp(beta, r, z)
    return KernelValue(val, abs(val) * 1e-13, KernelMethod.MP_SERIES.value)


def k_beta_batch(beta: float, r: float, z: np.ndarray, cfg: EvalConfig = DEFAULT_CONFIG):
    """Vectorized auto-policy kernel row for quadrature assembly.

    Returns (mantissa, log_scale, mantissa_error) arrays with
    K(z_i) = mantissa_i * exp(log_scale_i).
    """
    z = np.asarray(z, dtype=float)
    mant = np.zeros_like(z)
    logs = np.zeros_like(z)
    errs = np.zeros_like(z)
    if r == 0.0:
        mant[:] = math.exp(-_sp.gammaln(beta))
        errs[:] = np.abs(mant) * 1e-16
        return mant, logs, errs
    near = r * np.abs(z) <= _AUTO_SERIES_LIMIT
    pos = (~near) & (z > 0)
    neg = (~near) & (z <= 0)
    if np.any(near):
        v, e, _ = _k_0f1_vec(beta, r, z[near], cfg.series)
        mant[near] = v
        errs[near] = e
    if np.any(neg):
        v, e, _ = _k_hermite_vec(beta, r, z[neg], cfg.series)
        bad = e > _CANCEL_LIMIT * 2e-16 * np.maximum(np.abs(v), 1e-300)
        if np.any(bad):
            idx = np.where(neg)[0][bad]
            for i in idx:
                v_mp = _k_beta_mp(beta, r, float(z[i]))
                ztmp = float(z[i])
                v[np.where(np.where(neg)[0] == i)[0][0]] = v_mp
            e = np.where(bad, np.abs(v) * 1e-13, e)
        mant[neg] = v
        errs[neg] = e
    if np.any(pos):
        m, lg, e = _k_hankel_vec(beta, r, z[pos])
        mant[pos] = m
        logs[pos] = lg
        errs[pos] = e
    return mant, logs, errs
