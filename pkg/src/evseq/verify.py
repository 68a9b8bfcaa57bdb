"""Numerical verification harness.

Certifies the claimed properties of the e-processes rather than trusting the
algebra: Monte Carlo calibration of the supermartingale property, quadrature
confirmation that the fixed-sample likelihood ratio is an e-variable with
monotone power, exact enumeration of the Rademacher counterexample (where the
t-test process fails to be an e-variable), monotone-likelihood-ratio and
log-pmf positivity grid checks, and type-I error / e-power estimation.

Monte Carlo conventions:

* one master seed; replication r draws from a generator seeded by the pair
  (seed, r), so replications are independent, order-free, and parallelizable;
* pass bounds are 3 standard errors (~99.7% per check);
* at a null boundary the process is an exact martingale, so the mean e-value
  must sit within 3 SE of 1 on both sides; strictly inside the null it must
  only not exceed 1 + 3 SE; outside the null (or under a misspecified
  generator such as Rademacher data fed to the t-test) no bound applies and
  the verdict is absent.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from . import models
from .core import EffectSpec, StoppingRule
from .errors import ConfigError, ContractError, DataError, NumericalError
from .specfun import NoncentralTParams, _nct_logratio_batch, nct_logpdf, nct_logratio, norm_cdf

_QUAD_CUT = 50.0      # quadrature switches to an inverse-variable tail integral here
_QUAD_ABS_TOL = 1e-9
_MLR_SLACK = 1e-10
_POSITIVITY_SLACK = -1e-8
_ENUM_MAX_N = 20


# ---------------------------------------------------------------------------
# simulation configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianGen:
    """i.i.d. Gaussian outcomes; effect size for the t-test is mu/sigma."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and self.sigma > 0):
            raise ContractError(f"gaussian generator needs finite mu and sigma > 0, got {self!r}")


@dataclass(frozen=True)
class RademacherGen:
    """i.i.d. +-1 fair signs; the t-test process is misspecified under these."""


@dataclass(frozen=True)
class BernoulliGen:
    """i.i.d. {0,1} outcomes with success probability theta."""

    theta: float

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ContractError(f"bernoulli generator needs theta in (0,1), got {self.theta!r}")


@dataclass(frozen=True)
class RegressionGen:
    """Y_i = delta*sigma*X_i + Z_i'beta + sigma*eps_i with standard normal eps.

    delta is the effect size (coefficient of interest over the error scale).
    Nuisance covariates Z_i are i.i.d. standard normal with dimension
    len(beta); X_i is standard normal (x_mode="normal") or constant one
    (x_mode="ones", the pure-intercept reduction).
    """

    delta: float
    beta: tuple[float, ...]
    sigma: float
    x_mode: str = "normal"

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not (math.isfinite(self.delta) and math.isfinite(self.sigma) and self.sigma > 0):
            raise ContractError(f"regression generator needs finite delta, sigma > 0, got {self!r}")
        if self.x_mode not in ("normal", "ones"):
            raise ContractError(f"x_mode must be 'normal' or 'ones', got {self.x_mode!r}")


@dataclass(frozen=True)
class SimConfig:
    """Generator, master seed, replication count, and checkpoint steps."""

    generator: object
    seed: int
    reps: int
    checkpoints: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.generator, (GaussianGen, RademacherGen, BernoulliGen, RegressionGen)):
            raise ContractError(f"unknown generator {self.generator!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ContractError(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")
        if not (isinstance(self.reps, int) and self.reps >= 1):
            raise ContractError(f"reps must be a positive integer, got {self.reps!r}")
        cps = tuple(int(c) for c in self.checkpoints)
        object.__setattr__(self, "checkpoints", cps)
        if not cps or any(c < 1 for c in cps) or any(b <= a for a, b in zip(cps, cps[1:])):
            raise ContractError(f"checkpoints must be strictly increasing positive steps, got {cps!r}")


def _rng(seed: int, rep: int) -> np.random.Generator:
    # per-replication stream: the (master seed, replication index) pair is the
    # entropy of an independent seed sequence
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=[seed, rep])))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationReport:
    """Per-checkpoint Monte Carlo summary with verdicts against a stated bound.

    verdicts entries are True/False where a bound applies and None for purely
    diagnostic estimates.  ``to_json`` serializes the reproducible content
    (config echo, per-checkpoint arrays, verdicts); wall-clock runtime stays
    on the in-memory report only, so identical configurations produce
    byte-identical JSON.
    """

    check: str
    config: dict
    checkpoints: tuple[int, ...]
    means: tuple[float, ...]
    standard_errors: tuple[float, ...]
    verdicts: tuple[Optional[bool], ...]
    bound: str
    runtime_seconds: float

    @property
    def passed(self) -> bool:
        return not any(v is False for v in self.verdicts)

    def to_json(self) -> str:
        doc = {
            "schema": "evseq-report/1",
            "check": self.check,
            "config": self.config,
            "checkpoints": list(self.checkpoints),
            "means": list(self.means),
            "standard_errors": list(self.standard_errors),
            "verdicts": list(self.verdicts),
            "bound": self.bound,
            "passed": self.passed,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _spec_echo(spec: EffectSpec) -> dict:
    if spec.prior is None:
        return {"delta0": spec.delta0, "delta_plus": spec.delta_plus,
                "guarantee_void": spec.guarantee_void}
    return {"delta0": spec.delta0, "prior": [list(a) for a in spec.prior.atoms]}


def _sim_echo(sim: SimConfig) -> dict:
    gen = sim.generator
    if isinstance(gen, GaussianGen):
        g = {"kind": "gaussian", "mu": gen.mu, "sigma": gen.sigma}
    elif isinstance(gen, RademacherGen):
        g = {"kind": "rademacher"}
    elif isinstance(gen, BernoulliGen):
        g = {"kind": "bernoulli", "theta": gen.theta}
    else:
        g = {"kind": "regression", "delta": gen.delta, "beta": list(gen.beta),
             "sigma": gen.sigma, "x_mode": gen.x_mode}
    return {"generator": g, "seed": sim.seed, "reps": sim.reps,
            "checkpoints": list(sim.checkpoints)}


# ---------------------------------------------------------------------------
# vectorized log e-value paths
# ---------------------------------------------------------------------------

_COMPATIBLE = {
    "t": (GaussianGen, RademacherGen),
    "chisq": (GaussianGen,),
    "bernoulli": (BernoulliGen,),
    "linreg": (RegressionGen,),
}


def _check_compatible(model: str, sim: SimConfig) -> None:
    allowed = _COMPATIBLE.get(model)
    if allowed is None:
        raise ConfigError(f"unknown model {model!r}")
    if not isinstance(sim.generator, allowed):
        raise ConfigError(
            f"generator {type(sim.generator).__name__} is not compatible with model {model!r}"
        )


def _alternatives(spec: EffectSpec) -> list[tuple[float, float]]:
    """(delta, weight) pairs; a point alternative is a unit-weight atom."""
    if spec.prior is None:
        return [(spec.delta_plus, 1.0)]
    return list(spec.prior.atoms)


def _mix_rows(atom_log_es: list[np.ndarray], weights: list[float]) -> np.ndarray:
    if len(atom_log_es) == 1:
        return atom_log_es[0]
    stacked = np.stack([math.log(w) + a for a, w in zip(atom_log_es, weights)])
    m = stacked.max(axis=0)
    out = m.copy()
    fin = np.isfinite(m)
    out[fin] = m[fin] + np.log(np.exp(stacked[:, fin] - m[fin]).sum(axis=0))
    return out


def _sample_outcomes(sim: SimConfig, n: int) -> np.ndarray:
    """reps x n outcome matrix, one independent stream per row."""
    gen = sim.generator
    out = np.empty((sim.reps, n))
    for r in range(sim.reps):
        rng = _rng(sim.seed, r)
        if isinstance(gen, GaussianGen):
            out[r] = gen.mu + gen.sigma * rng.standard_normal(n)
        elif isinstance(gen, RademacherGen):
            out[r] = rng.integers(0, 2, n) * 2.0 - 1.0
        else:  # BernoulliGen
            out[r] = (rng.random(n) < gen.theta).astype(float)
    return out


def _t_log_e_paths(y: np.ndarray, ns: Sequence[int], spec: EffectSpec) -> np.ndarray:
    """Log e-values of the t-test process at the steps ns, one row per stream."""
    y1 = y[:, :1]
    if np.any(y1 == 0.0):
        raise DataError("t-test simulation drew an exact zero first outcome")
    u = y / np.abs(y1)
    cs = np.cumsum(u, axis=1)
    cs2 = np.cumsum(u * u, axis=1)
    alts = _alternatives(spec)
    out = np.empty((y.shape[0], len(ns)))
    for col, n in enumerate(ns):
        if n == 1:
            sign = u[:, 0]
            per_atom = []
            for d, _ in alts:
                lr_pos = math.log(norm_cdf(d)) - math.log(norm_cdf(spec.delta0))
                lr_neg = math.log(norm_cdf(-d)) - math.log(norm_cdf(-spec.delta0))
                per_atom.append(np.where(sign > 0, lr_pos, lr_neg))
        else:
            s = cs[:, n - 1]
            var_num = np.maximum(cs2[:, n - 1] - s * s / n, 0.0)
            with np.errstate(divide="ignore"):
                t = (s / math.sqrt(n)) / np.sqrt(var_num / (n - 1))
            rn = math.sqrt(n)
            per_atom = [_nct_logratio_batch(t, n - 1, rn * d, rn * spec.delta0) for d, _ in alts]
        out[:, col] = _mix_rows(per_atom, [w for _, w in alts])
    return out


def _chisq_log_e_paths(y: np.ndarray, ns: Sequence[int], spec: EffectSpec) -> np.ndarray:
    u = y - y[:, :1]
    cs = np.cumsum(u, axis=1)
    cs2 = np.cumsum(u * u, axis=1)
    alts = _alternatives(spec)
    s0 = spec.delta0
    out = np.empty((y.shape[0], len(ns)))
    for col, n in enumerate(ns):
        q = np.maximum(cs2[:, n - 1] - cs[:, n - 1] ** 2 / n, 0.0)
        per_atom = [
            (n - 1) * math.log(s0 / sp) + 0.5 * (1.0 / s0**2 - 1.0 / sp**2) * q
            for sp, _ in alts
        ]
        out[:, col] = _mix_rows(per_atom, [w for _, w in alts])
    return out


def _bern_log_e_paths(y: np.ndarray, ns: Sequence[int], spec: EffectSpec) -> np.ndarray:
    eq = (y == y[:, :1]).astype(float)
    c = np.cumsum(eq, axis=1)
    alts = _alternatives(spec)
    th0 = spec.delta0
    out = np.empty((y.shape[0], len(ns)))

    def shape(n, t_arr, th):
        lt, lq = math.log(th), math.log1p(-th)
        return np.logaddexp(t_arr * lt + (n - t_arr) * lq, t_arr * lq + (n - t_arr) * lt)

    for col, n in enumerate(ns):
        t_arr = np.maximum(c[:, n - 1], n - c[:, n - 1])
        per_atom = [shape(n, t_arr, tp) - shape(n, t_arr, th0) for tp, _ in alts]
        out[:, col] = _mix_rows(per_atom, [w for _, w in alts])
    return out


def _linreg_log_e_paths(sim: SimConfig, ns: Sequence[int], spec: EffectSpec) -> np.ndarray:
    """Per-replication sequential regression runs (not vectorized; small reps)."""
    gen = sim.generator
    d = len(gen.beta)
    beta = np.asarray(gen.beta)
    n_max = max(ns)
    positions = {n: col for col, n in enumerate(ns)}
    out = np.empty((sim.reps, len(ns)))
    for r in range(sim.reps):
        rng = _rng(sim.seed, r)
        z = rng.standard_normal((n_max, d))
        x = np.ones(n_max) if gen.x_mode == "ones" else rng.standard_normal(n_max)
        y = gen.delta * gen.sigma * x + z @ beta + gen.sigma * rng.standard_normal(n_max)
        snap = None
        for i in range(n_max):
            snap = models.reg_update(snap, (y[i], x[i], z[i]))
            if i + 1 in positions:
                alts = _alternatives(spec)
                comps = [models.reg_log_evalue(snap, spec.delta0, dp) for dp, _ in alts]
                if len(comps) == 1:
                    out[r, positions[i + 1]] = comps[0]
                else:
                    ws = [w for _, w in alts]
                    m = max(lw + c for lw, c in zip(map(math.log, ws), comps))
                    out[r, positions[i + 1]] = m + math.log(
                        math.fsum(math.exp(math.log(w) + c - m) for w, c in zip(ws, comps))
                    )
    return out


def _log_e_paths(model: str, spec: EffectSpec, sim: SimConfig, ns: Sequence[int]) -> np.ndarray:
    _check_compatible(model, sim)
    if model == "linreg":
        return _linreg_log_e_paths(sim, ns, spec)
    y = _sample_outcomes(sim, max(ns))
    if model == "t":
        return _t_log_e_paths(y, ns, spec)
    if model == "chisq":
        return _chisq_log_e_paths(y, ns, spec)
    return _bern_log_e_paths(y, ns, spec)


# ---------------------------------------------------------------------------
# supermartingale calibration
# ---------------------------------------------------------------------------

def _null_regime(model: str, spec: EffectSpec, sim: SimConfig) -> Optional[str]:
    """'boundary' / 'interior' when the generator's effect lies in the null.

    None when no supermartingale bound applies: effect on the alternative
    side, a guarantee-void point alternative, or a misspecified generator
    (Rademacher data under the t-test's Gaussian model).
    """
    gen = sim.generator
    if isinstance(gen, RademacherGen):
        return None
    if model == "t":
        effect = gen.mu / gen.sigma
    elif model == "chisq":
        effect = gen.sigma
    elif model == "bernoulli":
        effect = max(gen.theta, 1.0 - gen.theta)
    else:
        effect = gen.delta
    if model == "chisq" and spec.prior is None and spec.delta_plus < spec.delta0:
        # reversed one-sided variance test: null is sigma >= sigma0
        if effect == spec.delta0:
            return "boundary"
        return "interior" if effect > spec.delta0 else None
    if spec.guarantee_void:
        return None
    if effect == spec.delta0:
        return "boundary"
    return "interior" if effect < spec.delta0 else None


_MC_BOUND = "boundary: |mean - 1| <= 3*SE; interior null: mean <= 1 + 3*SE; otherwise diagnostic"


def mc_expectation(model: str, spec: EffectSpec, sim: SimConfig) -> VerificationReport:
    """Monte Carlo mean e-value at each checkpoint, with supermartingale verdicts.

    The e-process must be an exact martingale when the generating effect sits
    on the null boundary and a supermartingale strictly inside the null;
    the verdicts apply the corresponding 3 SE bound.  Generators outside the
    null (or misspecified ones) yield diagnostic-only reports.
    """
    start = time.perf_counter()
    log_e = _log_e_paths(model, spec, sim, sim.checkpoints)
    with np.errstate(over="ignore"):
        e = np.exp(log_e)
    means = e.mean(axis=0)
    if sim.reps > 1:
        ses = e.std(axis=0, ddof=1) / math.sqrt(sim.reps)
    else:
        ses = np.full(means.shape, math.nan)
    regime = _null_regime(model, spec, sim)
    verdicts: list[Optional[bool]] = []
    for mean, se in zip(means, ses):
        if regime == "boundary":
            verdicts.append(bool(abs(mean - 1.0) <= 3.0 * se))
        elif regime == "interior":
            verdicts.append(bool(mean <= 1.0 + 3.0 * se))
        else:
            verdicts.append(None)
    return VerificationReport(
        check="mc-expectation",
        config={"model": model, "spec": _spec_echo(spec), "sim": _sim_echo(sim),
                "regime": regime},
        checkpoints=sim.checkpoints,
        means=tuple(float(m) for m in means),
        standard_errors=tuple(float(s) for s in ses),
        verdicts=tuple(verdicts),
        bound=_MC_BOUND,
        runtime_seconds=time.perf_counter() - start,
    )


def type1_error_mc(
    model: str, spec: EffectSpec, rule: StoppingRule, horizon: int, sim: SimConfig
) -> VerificationReport:
    """Frequency of sup_{n <= horizon} e-value >= 1/alpha under a null generator.

    The generator must lie in the null (boundary included); the anytime-valid
    guarantee bounds the crossing probability by alpha, checked as
    frequency <= alpha + 3 SE.
    """
    start = time.perf_counter()
    if not (isinstance(horizon, int) and horizon >= 1):
        raise ConfigError(f"horizon must be a positive integer, got {horizon!r}")
    regime = _null_regime(model, spec, sim)
    if regime is None:
        raise ConfigError(
            "type1_error_mc requires a generator inside the null (boundary included)"
        )
    log_e = _log_e_paths(model, spec, sim, range(1, horizon + 1))
    crossed = (log_e.max(axis=1) >= rule.log_threshold).astype(float)
    freq = float(crossed.mean())
    se = float(crossed.std(ddof=1) / math.sqrt(sim.reps)) if sim.reps > 1 else math.nan
    return VerificationReport(
        check="type1-error",
        config={"model": model, "spec": _spec_echo(spec), "sim": _sim_echo(sim),
                "alpha": rule.alpha, "horizon": horizon, "regime": regime},
        checkpoints=(horizon,),
        means=(freq,),
        standard_errors=(se,),
        verdicts=(bool(freq <= rule.alpha + 3.0 * se),),
        bound="rejection frequency <= alpha + 3*SE",
        runtime_seconds=time.perf_counter() - start,
    )


def epower_estimate(model: str, spec: EffectSpec, n: int, sim: SimConfig) -> VerificationReport:
    """Mean log e-value at step n under the configured generator (diagnostic).

    This is the growth-rate criterion the process optimizes under the
    alternative; no pass bound applies, the report is informational.
    """
    start = time.perf_counter()
    if not (isinstance(n, int) and n >= 1):
        raise ConfigError(f"n must be a positive integer, got {n!r}")
    log_e = _log_e_paths(model, spec, sim, (n,))[:, 0]
    mean = float(log_e.mean())
    se = float(log_e.std(ddof=1) / math.sqrt(sim.reps)) if sim.reps > 1 else math.nan
    return VerificationReport(
        check="e-power",
        config={"model": model, "spec": _spec_echo(spec), "sim": _sim_echo(sim), "n": n},
        checkpoints=(n,),
        means=(mean,),
        standard_errors=(se,),
        verdicts=(None,),
        bound="diagnostic: mean log e-value, no bound",
        runtime_seconds=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# monotone likelihood ratio and e-variable checks
# ---------------------------------------------------------------------------

def mlr_grid_check(
    nu: float, lambda_plus: float, lambda_0: float, grid: Sequence[float]
) -> list[tuple[float, float, float, float]]:
    """Monotonicity violations of t -> log ratio along an ascending grid.

    Returns (t_prev, t, ratio_prev, ratio) for every adjacent pair where the
    log ratio decreases by more than 1e-10; empty means the monotone
    likelihood ratio property held on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ContractError("grid must be a 1-D sequence with at least 2 points")
    if np.any(np.diff(grid) <= 0):
        raise ContractError("grid must be sorted strictly ascending")
    ratios = _nct_logratio_batch(grid, nu, lambda_plus, lambda_0)
    drops = np.nonzero(np.diff(ratios) < -_MLR_SLACK)[0]
    return [
        (float(grid[i]), float(grid[i + 1]), float(ratios[i]), float(ratios[i + 1]))
        for i in drops
    ]


def _h_integral(nu: float, lambda_plus: float, lambda_0: float, lam_true: float) -> float:
    """h(lam_true) = E[exp ratio] under T(nu, lam_true), by adaptive quadrature.

    Central piece on [-50, 50]; the tails are folded in exactly through the
    substitution t = 1/v (the integrand extends continuously to v = 0 because
    the likelihood ratio has finite limits at t = +-inf), which matters for
    small nu where the tail mass beyond 50 is far above the 1e-6 tolerance.
    """
    params = NoncentralTParams(nu, lam_true)

    def integrand(t: float) -> float:
        return math.exp(nct_logratio(t, nu, lambda_plus, lambda_0) + nct_logpdf(t, params))

    def tail_integrand(v: float) -> float:
        t = 1.0 / v
        return integrand(t) / (v * v)

    pieces = []
    interior = sorted({-5.0, 0.0, 5.0, float(np.clip(lam_true, -40, 40)),
                       float(np.clip(lambda_plus, -40, 40))})
    val, err = integrate.quad(
        integrand, -_QUAD_CUT, _QUAD_CUT, points=interior, limit=400, epsabs=_QUAD_ABS_TOL,
        epsrel=1e-10,
    )
    pieces.append((val, err))
    for sign in (1.0, -1.0):
        val, err = integrate.quad(
            lambda v: tail_integrand(sign * v), 0.0, 1.0 / _QUAD_CUT, limit=200,
            epsabs=_QUAD_ABS_TOL, epsrel=1e-10,
        )
        pieces.append((val, err))
    total = math.fsum(p for p, _ in pieces)
    total_err = math.fsum(e for _, e in pieces)
    if total_err > 1e-7:
        raise NumericalError(
            f"quadrature error estimate {total_err:.3e} too large for "
            f"h(nu={nu}, lambda+={lambda_plus}, lambda0={lambda_0}, lambda={lam_true})"
        )
    return total


def evariable_quadrature_check(
    nu: float, lambda_plus: float, lambda_0: float, lambda_true_grid: Sequence[float]
) -> list[tuple[float, float]]:
    """(lambda_true, h) pairs with h the expected likelihood ratio under lambda_true.

    The fixed-sample ratio is an e-variable for every lambda <= lambda_0
    (h <= 1 there, h = 1 at lambda_0 exactly) and its expectation is
    nondecreasing in the true lambda; callers assert those properties on the
    returned values.
    """
    grid = [float(v) for v in lambda_true_grid]
    for v in grid + [nu, lambda_plus, lambda_0]:
        if not math.isfinite(v):
            raise ContractError("evariable_quadrature_check requires finite inputs")
    return [(lam, _h_integral(nu, lambda_plus, lambda_0, lam)) for lam in grid]


# ---------------------------------------------------------------------------
# Rademacher counterexample: exact enumeration and Taylor coefficient
# ---------------------------------------------------------------------------

def rademacher_exact_expectation(n: int, delta: float) -> float:
    """Exact E[M_n^delta] under i.i.d. fair signs, by full enumeration.

    M_n is the t-test process with delta0 = 0 and point alternative delta.
    The process value depends on a sign sequence only through its sum, so the
    2^n paths collapse to n+1 binomial groups; all-equal sequences hit the
    infinite-t-statistic limit.  At delta = 0 the ratio is identically 1 and
    the returned value is exactly 1.0.
    """
    if not (isinstance(n, int) and 2 <= n <= _ENUM_MAX_N):
        raise ConfigError(f"enumeration supports 2 <= n <= {_ENUM_MAX_N}, got {n!r}")
    if not (isinstance(delta, (int, float)) and math.isfinite(delta)):
        raise ContractError(f"delta must be finite, got {delta!r}")
    rn = math.sqrt(n)
    terms = []
    for k in range(n + 1):
        s = 2 * k - n
        if k == 0:
            t = -math.inf
        elif k == n:
            t = math.inf
        else:
            var_num = n - s * s / n
            t = (s / rn) / math.sqrt(var_num / (n - 1))
        log_m = nct_logratio(t, n - 1, rn * delta, 0.0)
        terms.append(math.comb(n, k) * math.exp(log_m))
    return math.fsum(terms) / 2.0**n


def taylor_coeff_fit(n: int, deltas: Sequence[float]) -> float:
    """Leading coefficient of E[M_n^delta] - 1 = c * delta^4 + O(delta^6).

    Evaluates the exact enumeration on the given deltas, forms
    (E - 1)/delta^4, and extrapolates delta -> 0 by a polynomial fit in
    delta^2 (the expansion has only even powers).  The fitted intercept
    estimates c, which the counterexample predicts to be (n-1)/6.
    """
    ds = [float(d) for d in deltas]
    if len(ds) < 3:
        raise ContractError("need at least 3 delta values to extrapolate")
    if any(not (0.0 < d <= 0.3) for d in ds):
        raise ContractError(f"deltas must lie in (0, 0.3], got {ds!r}")
    if len(set(ds)) != len(ds):
        raise ContractError("deltas must be distinct")
    z = np.array([d * d for d in ds])
    r = np.array([(rademacher_exact_expectation(n, d) - 1.0) / d**4 for d in ds])
    deg = min(len(ds) - 1, 2)
    try:
        coeffs = np.polynomial.polynomial.polyfit(z, r, deg)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"extrapolation fit failed: {exc}") from exc
    c0 = float(coeffs[0])
    if not math.isfinite(c0):
        raise NumericalError("extrapolation produced a non-finite coefficient")
    return c0


# ---------------------------------------------------------------------------
# Bernoulli log-pmf positivity
# ---------------------------------------------------------------------------

def bern_positivity_check(
    theta_grid: Sequence[float], n_max: int
) -> list[tuple[float, int, float, float]]:
    """Sign violations of the mixed difference d2/(dtheta dT) ln f_theta(T).

    Positivity of this mixed partial is what makes the likelihood ratio
    increasing in the sufficient statistic.  Checked by central finite
    differences treating T as a real; entries (theta, n, T, value) are
    returned where the estimate falls below -1e-8 (slack absorbs the vanishing
    bracket at theta -> 1/2 with 2T = n).  Empty means positivity held.
    """
    thetas = [float(t) for t in theta_grid]
    if any(not (0.5 < t < 1.0) for t in thetas):
        raise ContractError(f"theta grid must lie inside (1/2, 1), got {thetas!r}")
    if not (isinstance(n_max, int) and n_max >= 1):
        raise ContractError(f"n_max must be a positive integer, got {n_max!r}")
    violations = []
    dt = 0.5
    for theta in thetas:
        h = min(1e-4, 0.5 * (theta - 0.5), 0.5 * (1.0 - theta))
        for n in range(1, n_max + 1):
            for t_stat in range(math.ceil(n / 2), n + 1):
                g = models._bern_logpmf_shape
                mixed = (
                    g(n, t_stat + dt, theta + h)
                    - g(n, t_stat - dt, theta + h)
                    - g(n, t_stat + dt, theta - h)
                    + g(n, t_stat - dt, theta - h)
                ) / (4.0 * h * dt)
                if mixed < _POSITIVITY_SLACK:
                    violations.append((theta, n, float(t_stat), mixed))
    return violations
