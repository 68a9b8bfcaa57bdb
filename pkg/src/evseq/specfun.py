"""Numerically stable special functions.

Log-gamma, the standard normal CDF, central/noncentral Student-t log-densities
and log-ratios, and the scaled chi-square log-density.  These are the only
density primitives the e-processes need; everything is evaluated in natural
log space.

The noncentral-t density is computed from the single-sum series

    f(t; nu, lam) = nu^(nu/2) exp(-lam^2/2)
                    / (sqrt(pi) Gamma(nu/2) (nu+t^2)^((nu+1)/2))
                    * sum_j Gamma((nu+j+1)/2) (lam^j / j!) (t sqrt(2)/sqrt(nu+t^2))^j

in log space with sign tracking (the terms alternate when lam*t < 0).  When
the signed sum loses too many digits to cancellation, or fails to converge
within the term cap, evaluation falls back to quadrature of the equivalent
integral representation

    sum_j Gamma((nu+j+1)/2) u^j / j!
        = 2^(-(nu-1)/2) exp(a^2/2) int_0^inf w^nu exp(-(w-a)^2/2) dw,
      a = u/sqrt(2),

whose integrand is strictly positive: no cancellation for any sign of u.
The integral is taken in the variable v = ln w (analytic integrand, no
endpoint singularity for fractional nu) by composite Gauss-Legendre over a
bracket where the log-integrand is within 80 of its peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_PI = 0.5 * math.log(math.pi)

# series controls
_TERM_CAP = 10_000
_LOG_TERM_FLOOR = math.log(1e-17)  # stop once a term is negligible vs the largest
# fast path keeps >= 14 digits when the signed sum retains at least this
# fraction of the largest term's magnitude
_CANCEL_FLOOR = 1e-2


@dataclass(frozen=True)
class NoncentralTParams:
    """Degrees of freedom and noncentrality of a noncentral Student-t law.

    nu may be any positive real (regression degrees of freedom vary with the
    numerical rank of the nuisance design and need not be integral).
    """

    nu: float
    lam: float

    def __post_init__(self) -> None:
        if not (isinstance(self.nu, (int, float)) and math.isfinite(self.nu) and self.nu > 0):
            raise DomainError(f"degrees of freedom must be a positive finite real, got {self.nu!r}")
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam)):
            raise DomainError(f"noncentrality must be finite, got {self.lam!r}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
        raise DomainError(f"log_gamma requires a positive finite argument, got {x!r}")
    return math.lgamma(x)


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    Phi(x) = erfc(-x/sqrt(2))/2; erfc is evaluated by the platform libm,
    accurate to a few ulp, so the absolute error is far below 1e-12.
    """
    if not (isinstance(x, (int, float)) and math.isfinite(x)):
        raise DomainError(f"norm_cdf requires a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def _series_fast(nu: float, u: float):
    """Signed log-sum-exp evaluation of sum_j Gamma((nu+j+1)/2) u^j / j!.

    Returns the log of the sum, or None when the result would lose too much
    precision (heavy cancellation) or the term cap is reached.
    """
    lu = math.log(abs(u))
    neg = u < 0.0
    logs = []
    m = -math.inf
    j = 0
    while True:
        lt = math.lgamma(0.5 * (nu + j + 1.0)) + j * lu - math.lgamma(j + 1.0)
        logs.append(lt)
        if lt > m:
            m = lt
        # stop once past the peak and negligible against the largest term
        if j >= 1 and lt < logs[-2] and lt - m < _LOG_TERM_FLOOR:
            break
        j += 1
        if j >= _TERM_CAP:
            return None
    tot = 0.0
    for jj, lt in enumerate(logs):
        term = math.exp(lt - m)
        tot += -term if (neg and jj & 1) else term
    if tot < _CANCEL_FLOOR:
        return None
    return m + math.log(tot)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_QUAD_LOG_DROP = 80.0   # integrate where the log-integrand is within this of its peak
_QUAD_PANEL = 2.0       # composite panel width in v = ln w
_BRACKET_CAP = 200      # expansion steps before declaring failure


def _series_quad(nu: float, u: float) -> float:
    """Quadrature of the positive-integrand representation (rare, slow path).

    With a = u/sqrt(2) the log-integrand psi(v) = (nu+1)v - (e^v - a)^2/2 is
    strictly concave with its peak at e^v = (a + sqrt(a^2 + 4(nu+1)))/2, so a
    geometric expansion brackets the mass and composite Gauss-Legendre
    converges geometrically.
    """
    a = u / _SQRT2
    w_star = 0.5 * (a + math.sqrt(a * a + 4.0 * (nu + 1.0)))
    v_star = math.log(w_star)

    def psi(v: float) -> float:
        return (nu + 1.0) * v - 0.5 * (math.exp(v) - a) ** 2

    psi_star = psi(v_star)
    lo, step, k = v_star, 0.5, 0
    while psi(lo) > psi_star - _QUAD_LOG_DROP:
        lo -= step
        step *= 1.6
        k += 1
        if k > _BRACKET_CAP:
            raise NumericalError(f"series quadrature could not bracket (nu={nu}, u={u})")
    hi, step, k = v_star, 0.5, 0
    while psi(hi) > psi_star - _QUAD_LOG_DROP:
        hi += step
        step *= 1.6
        k += 1
        if k > _BRACKET_CAP:
            raise NumericalError(f"series quadrature could not bracket (nu={nu}, u={u})")
    edges = np.linspace(lo, hi, max(2, math.ceil((hi - lo) / _QUAD_PANEL) + 1))
    total = 0.0
    for va, vb in zip(edges[:-1], edges[1:]):
        v = 0.5 * (vb - va) * _GL_NODES + 0.5 * (vb + va)
        pv = (nu + 1.0) * v - 0.5 * (np.exp(v) - a) ** 2
        total += 0.5 * (vb - va) * float(_GL_WEIGHTS @ np.exp(pv - psi_star))
    return -0.5 * (nu - 1.0) * math.log(2.0) + 0.5 * a * a + psi_star + math.log(total)


def _log_halfgamma_series(nu: float, u: float) -> float:
    """log of sum_j Gamma((nu+j+1)/2) u^j / j! for finite u."""
    if u == 0.0:
        return math.lgamma(0.5 * (nu + 1.0))
    fast = _series_fast(nu, u)
    if fast is not None:
        return fast
    return _series_quad(nu, u)


def nct_logpdf(t: float, params: NoncentralTParams) -> float:
    """Log-density of the noncentral Student-t distribution at t.

    Relative density accuracy is at or below 1e-10 for nu in [1, 100],
    |lam| <= 6, |t| <= 20 (and degrades gracefully outside).
    """
    if not (isinstance(t, (int, float)) and math.isfinite(t)):
        raise DomainError(f"nct_logpdf requires finite t, got {t!r}")
    nu, lam = params.nu, params.lam
    x = t * _SQRT2 / math.sqrt(nu + t * t)
    log_c = (
        0.5 * nu * math.log(nu)
        - _LOG_SQRT_PI
        - math.lgamma(0.5 * nu)
        - 0.5 * (nu + 1.0) * math.log(nu + t * t)
    )
    return log_c - 0.5 * lam * lam + _log_halfgamma_series(nu, lam * x)


def nct_logratio(t: float, nu: float, lambda_plus: float, lambda_0: float) -> float:
    """Log of the noncentral-t density ratio f_{nu,lambda_plus}(t) / f_{nu,lambda_0}(t).

    t may be +inf or -inf: the polynomial tail factor cancels between the two
    densities and the exponent base tends to +-sqrt(2), so the limit is the
    log-ratio of the two exponentially weighted series.  That limit is what
    zero-variance (tied) data streams require.
    """
    if not (isinstance(nu, (int, float)) and math.isfinite(nu) and nu > 0):
        raise DomainError(f"degrees of freedom must be a positive finite real, got {nu!r}")
    for lam in (lambda_plus, lambda_0):
        if not (isinstance(lam, (int, float)) and math.isfinite(lam)):
            raise DomainError(f"noncentrality must be finite, got {lam!r}")
    if isinstance(t, (int, float)) and math.isnan(t):
        raise DomainError("nct_logratio requires a non-NaN statistic")
    if lambda_plus == lambda_0:
        return 0.0
    if math.isinf(t):
        x = math.copysign(_SQRT2, t)
    else:
        x = t * _SQRT2 / math.sqrt(nu + t * t)
    shift = 0.5 * (lambda_0 * lambda_0 - lambda_plus * lambda_plus)
    return shift + _log_halfgamma_series(nu, lambda_plus * x) - _log_halfgamma_series(nu, lambda_0 * x)


def chisq_scaled_logpdf(q: float, nu: float, s: float) -> float:
    """Log-density at q of s times a chi-square variate with nu degrees of freedom."""
    for name, val in (("q", q), ("nu", nu), ("s", s)):
        if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
            raise DomainError(f"chisq_scaled_logpdf requires {name} > 0 and finite, got {val!r}")
    half = 0.5 * nu
    return (half - 1.0) * math.log(q / s) - 0.5 * q / s - math.log(s) - half * math.log(2.0) - math.lgamma(half)


# ---------------------------------------------------------------------------
# batch evaluation (internal; hot path of the Monte Carlo harness)
# ---------------------------------------------------------------------------

_BATCH_CHUNK = 16_384


def _series_term_count(nu: float, u_max: float) -> int:
    """Number of terms the fast series needs at |u| = u_max (monotone in |u|)."""
    if u_max == 0.0:
        return 1
    lu = math.log(u_max)
    m = -math.inf
    prev = math.inf
    j = 0
    while j < _TERM_CAP:
        lt = math.lgamma(0.5 * (nu + j + 1.0)) + j * lu - math.lgamma(j + 1.0)
        if lt > m:
            m = lt
        if j >= 1 and lt < prev and lt - m < _LOG_TERM_FLOOR:
            break
        prev = lt
        j += 1
    return j + 1


def _halfgamma_series_batch(nu: float, u: np.ndarray) -> np.ndarray:
    """Vectorized _log_halfgamma_series over a 1-D array of u values."""
    out = np.empty(u.shape, dtype=float)
    zero = u == 0.0
    if zero.any():
        out[zero] = math.lgamma(0.5 * (nu + 1.0))
    work = ~zero
    idx = np.nonzero(work)[0]
    for start in range(0, idx.size, _BATCH_CHUNK):
        sel = idx[start : start + _BATCH_CHUNK]
        uc = u[sel]
        n_terms = _series_term_count(nu, float(np.abs(uc).max())) + 4
        if n_terms >= _TERM_CAP:
            out[sel] = [_log_halfgamma_series(nu, float(v)) for v in uc]
            continue
        j = np.arange(n_terms, dtype=float)
        base = np.array([math.lgamma(0.5 * (nu + jj + 1.0)) - math.lgamma(jj + 1.0) for jj in j])
        lt = base[None, :] + np.log(np.abs(uc))[:, None] * j[None, :]
        m = lt.max(axis=1)
        e = np.exp(lt - m[:, None])
        sgn = np.ones(n_terms)
        sgn[1::2] = -1.0
        tot = np.where(uc < 0.0, e @ sgn, e.sum(axis=1))
        ok = tot >= _CANCEL_FLOOR
        vals = np.empty(uc.shape)
        vals[ok] = m[ok] + np.log(tot[ok])
        if not ok.all():
            vals[~ok] = [_log_halfgamma_series(nu, float(v)) for v in uc[~ok]]
        out[sel] = vals
    return out


def _nct_logratio_batch(t: np.ndarray, nu: float, lambda_plus: float, lambda_0: float) -> np.ndarray:
    """nct_logratio over an array of statistics (infinities allowed, NaN rejected)."""
    t = np.asarray(t, dtype=float)
    if np.isnan(t).any():
        raise DomainError("nct_logratio requires non-NaN statistics")
    if lambda_plus == lambda_0:
        return np.zeros(t.shape)
    out = np.empty(t.shape, dtype=float)
    pos_inf = t == np.inf
    neg_inf = t == -np.inf
    if pos_inf.any():
        out[pos_inf] = nct_logratio(math.inf, nu, lambda_plus, lambda_0)
    if neg_inf.any():
        out[neg_inf] = nct_logratio(-math.inf, nu, lambda_plus, lambda_0)
    fin = ~(pos_inf | neg_inf)
    tf = t[fin]
    x = tf * _SQRT2 / np.sqrt(nu + tf * tf)
    shift = 0.5 * (lambda_0 * lambda_0 - lambda_plus * lambda_plus)
    out[fin] = (
        shift
        + _halfgamma_series_batch(nu, lambda_plus * x)
        - _halfgamma_series_batch(nu, lambda_0 * x)
    )
    return out
