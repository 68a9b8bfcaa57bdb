"""The four concrete e-processes.

Each model is a coarsening (which removes the nuisance group action), a
sufficient statistic of the coarsened stream, and a closed-form likelihood
ratio read directly off the current statistic:

* ``t``         scale-invariant t-test; U_i = Y_i/|Y_1|, statistic is the
                one-sample t-statistic, ratio of noncentral-t densities.
* ``chisq``     location-invariant variance test; U_i = Y_i - Y_1, statistic
                is the unnormalised empirical variance Q_n.
* ``linreg``    linear regression with nuisance covariates; the coarsening is
                the unit-norm least-squares residual expressed in a null-space
                basis of the nuisance design.
* ``bernoulli`` label-agnostic Bernoulli; U_i = 1{Y_i = Y_1}, statistic is
                the larger outcome count.

The process value at step n is computed from the sufficient statistic alone,
never as a running product of conditional factors; the two coincide because
the statistic is sufficient.  States are immutable values: updates return new
records, so distinct streams can be processed concurrently without sharing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DataError, DomainError, NumericalError, RegressionStartup, StateError
from .specfun import nct_logratio, norm_cdf

# numerical-rank convention: singular values below this fraction of the
# largest are treated as zero
_RANK_RTOL = 1e-10


def _require_finite_real(y, model: str) -> float:
    if isinstance(y, bool) or not isinstance(y, (int, float)):
        raise DataError(f"{model}: observation must be a real number, got {y!r}")
    y = float(y)
    if not math.isfinite(y):
        raise DataError(f"{model}: observation must be finite, got {y!r}")
    return y


def _logaddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if a == -math.inf:
        return -math.inf
    return a + math.log1p(math.exp(b - a))


# ---------------------------------------------------------------------------
# scale-invariant t-test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TTestState:
    """Sufficient-statistic accumulators of the coarsened stream U_i = Y_i/|Y_1|."""

    n: int
    abs_y1: float
    sign_u1: int
    sum_u: float
    sum_u2: float


def t_update(state: Optional[TTestState], y) -> TTestState:
    y = _require_finite_real(y, "t-test")
    if state is None:
        if y == 0.0:
            raise DataError(
                "t-test: the first outcome must be nonzero (the coarsening Y_i/|Y_1| "
                "is undefined at Y_1 = 0, a probability-zero event under the model)"
            )
        sign = 1 if y > 0 else -1
        return TTestState(n=1, abs_y1=abs(y), sign_u1=sign, sum_u=float(sign), sum_u2=1.0)
    u = y / state.abs_y1
    return TTestState(
        n=state.n + 1,
        abs_y1=state.abs_y1,
        sign_u1=state.sign_u1,
        sum_u=state.sum_u + u,
        sum_u2=state.sum_u2 + u * u,
    )


def t_statistic(state: TTestState) -> float:
    """One-sample t-statistic of the coarsened stream; +-inf on zero variance."""
    if state.n < 2:
        raise StateError("t-statistic requires at least 2 observations")
    n = state.n
    var_num = state.sum_u2 - state.sum_u * state.sum_u / n
    if var_num <= 0.0:
        # all coarsened values equal; their common value is sign_u1 != 0
        if state.sum_u > 0.0:
            return math.inf
        if state.sum_u < 0.0:
            return -math.inf
        raise NumericalError("degenerate t-test state: zero variance with zero sum")
    return (state.sum_u / math.sqrt(n)) / math.sqrt(var_num / (n - 1))


def t_log_evalue(state: TTestState, delta0: float, delta_plus: float) -> float:
    """Log process value of the one-sided t-test.

    For n >= 2 this is the noncentral-t density ratio at the current
    t-statistic with nu = n-1 and noncentralities sqrt(n)*delta.  At n = 1
    the statistic is the sign of U_1 and the exact likelihood ratio is
    Phi(delta_plus * u_1) / Phi(delta0 * u_1).
    """
    if delta_plus == delta0:
        return 0.0
    if state.n == 1:
        s = float(state.sign_u1)
        return math.log(norm_cdf(delta_plus * s)) - math.log(norm_cdf(delta0 * s))
    rn = math.sqrt(state.n)
    return nct_logratio(t_statistic(state), state.n - 1, rn * delta_plus, rn * delta0)


# ---------------------------------------------------------------------------
# location-invariant chi-square test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChiSqState:
    """Accumulators of the translated stream U_i = Y_i - Y_1 (so U_1 = 0)."""

    n: int
    y1: float
    sum_u: float
    sum_u2: float


def chisq_update(state: Optional[ChiSqState], y) -> ChiSqState:
    y = _require_finite_real(y, "chisq")
    if state is None:
        return ChiSqState(n=1, y1=y, sum_u=0.0, sum_u2=0.0)
    u = y - state.y1
    return ChiSqState(n=state.n + 1, y1=state.y1, sum_u=state.sum_u + u, sum_u2=state.sum_u2 + u * u)


def chisq_Q(state: ChiSqState) -> float:
    """Unnormalised empirical variance Q_n (identical computed from U or Y)."""
    q = state.sum_u2 - state.sum_u * state.sum_u / state.n
    return q if q > 0.0 else 0.0


def chisq_log_evalue(state: ChiSqState, sigma0: float, sigma_plus: float) -> float:
    """(n-1) log(sigma0/sigma_plus) + (sigma0^-2 - sigma_plus^-2) Q_n / 2."""
    for name, s in (("sigma0", sigma0), ("sigma_plus", sigma_plus)):
        if not (isinstance(s, (int, float)) and math.isfinite(s) and s > 0):
            raise DomainError(f"chisq: {name} must be a positive finite scale, got {s!r}")
    if sigma_plus == sigma0:
        return 0.0
    return (state.n - 1) * math.log(sigma0 / sigma_plus) + 0.5 * (
        1.0 / (sigma0 * sigma0) - 1.0 / (sigma_plus * sigma_plus)
    ) * chisq_Q(state)


# ---------------------------------------------------------------------------
# label-agnostic Bernoulli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BernoulliState:
    """Counts of the flip-invariant stream U_i = 1{Y_i = Y_1} (so U_1 = 1)."""

    n: int
    y1: int
    count_eq: int


def bern_update(state: Optional[BernoulliState], y) -> BernoulliState:
    if isinstance(y, bool):
        y = int(y)
    if not isinstance(y, (int, float)) or float(y) not in (0.0, 1.0):
        raise DataError(f"bernoulli: observation must be 0 or 1, got {y!r}")
    y = int(y)
    if state is None:
        return BernoulliState(n=1, y1=y, count_eq=1)
    return BernoulliState(n=state.n + 1, y1=state.y1, count_eq=state.count_eq + (y == state.y1))


def bern_statistic(state: BernoulliState) -> float:
    """T_n: the larger of the two outcome counts."""
    return float(max(state.count_eq, state.n - state.count_eq))


def _bern_logpmf_shape(n: int, t: float, theta: float) -> float:
    """log[ theta^T (1-theta)^(n-T) + (1-theta)^T theta^(n-T) ] with T real."""
    lt, lq = math.log(theta), math.log1p(-theta)
    return _logaddexp(t * lt + (n - t) * lq, t * lq + (n - t) * lt)


def bern_log_evalue(state: BernoulliState, theta0: float, theta_plus: float) -> float:
    """Log likelihood ratio of the label-agnostic Bernoulli process.

    Parameters must lie in [1/2, 1); for a parameter p below 1/2 apply the
    label-flip symmetry and pass 1-p instead.
    """
    for name, th in (("theta0", theta0), ("theta_plus", theta_plus)):
        if not (isinstance(th, (int, float)) and 0.5 <= th < 1.0):
            raise DomainError(
                f"bernoulli: {name} must lie in [1/2, 1); for a parameter below 1/2 "
                f"apply the label-flip symmetry theta -> 1 - theta (got {th!r})"
            )
    if theta_plus == theta0:
        return 0.0
    t = max(state.count_eq, state.n - state.count_eq)
    return _bern_logpmf_shape(state.n, t, theta_plus) - _bern_logpmf_shape(state.n, t, theta0)


# ---------------------------------------------------------------------------
# linear regression with nuisance covariates
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegressionSnapshot:
    """Accumulated regression data with the step-n derived quantities.

    basis is a k x n matrix whose rows form an orthonormal basis of the
    orthogonal complement of the column space of z (k = n - rank); b is the
    covariate of interest expressed in that basis.  Arrays are owned by the
    snapshot and must not be mutated.
    """

    n: int
    y: np.ndarray
    x: np.ndarray
    z: np.ndarray
    rank: int
    k: int
    basis: np.ndarray
    b: np.ndarray


def nullspace_basis(z: np.ndarray) -> tuple[np.ndarray, int]:
    """Orthonormal basis (as rows) of the orthogonal complement of span(columns of z).

    Rank is the number of singular values above _RANK_RTOL times the largest.
    For d = 0 the complement is all of R^n and the basis is the identity.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise DomainError(f"nullspace_basis expects an n x d matrix, got shape {z.shape}")
    n, d = z.shape
    if n < 1:
        raise DomainError("nullspace_basis requires n >= 1 rows")
    if d == 0:
        return np.eye(n), 0
    u, sv, _ = np.linalg.svd(z, full_matrices=True)
    if sv.size == 0 or sv[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(sv > _RANK_RTOL * sv[0]))
    return u[:, rank:].T.copy(), rank


def reg_update(snapshot: Optional[RegressionSnapshot], observation) -> RegressionSnapshot:
    """Append one (y, x, z) observation and recompute the derived quantities.

    observation is a sequence (y_i, x_i, z_i) with z_i a length-d sequence
    (possibly empty).  The basis is recomputed from scratch by a
    rank-revealing SVD; at desk scale this O(n d^2) step is cheap and keeps
    basis-invariance easy to test.
    """
    try:
        y_i, x_i, z_i = observation
    except (TypeError, ValueError):
        raise DataError(
            f"linreg: observation must be a (y, x, z-vector) triple, got {observation!r}"
        ) from None
    y_i = _require_finite_real(y_i, "linreg")
    x_i = _require_finite_real(x_i, "linreg")
    z_row = np.atleast_1d(np.asarray(z_i, dtype=float))
    if z_row.ndim != 1 or not np.all(np.isfinite(z_row)):
        raise DataError(f"linreg: nuisance covariates must be a finite vector, got {z_i!r}")
    if snapshot is None:
        y = np.array([y_i])
        x = np.array([x_i])
        z = z_row.reshape(1, -1)
    else:
        if z_row.size != snapshot.z.shape[1]:
            raise DataError(
                f"linreg: expected {snapshot.z.shape[1]} nuisance covariates, got {z_row.size}"
            )
        y = np.append(snapshot.y, y_i)
        x = np.append(snapshot.x, x_i)
        z = np.vstack([snapshot.z, z_row])
    basis, rank = nullspace_basis(z)
    n = y.size
    return RegressionSnapshot(
        n=n, y=y, x=x, z=z, rank=rank, k=n - rank, basis=basis, b=basis @ x
    )


def reg_t_statistic(snapshot: RegressionSnapshot) -> tuple[float, int, float]:
    """(t, dof, ||b_n||) of the regression t-statistic.

    t = (b'u/||b||) / (||Pu|| / sqrt(k-1)) with u the unit-norm residual in
    the null-space basis and P the projection orthogonal to b; t is invariant
    to the basis choice.  Raises RegressionStartup while k < 2 or b_n = 0,
    DataError on an all-zero residual.
    """
    if snapshot.k < 2:
        raise RegressionStartup(f"regression t-statistic needs k >= 2, have k = {snapshot.k}")
    b_norm = float(np.linalg.norm(snapshot.b))
    x_norm = float(np.linalg.norm(snapshot.x))
    if b_norm <= _RANK_RTOL * x_norm or b_norm == 0.0:
        raise RegressionStartup("b_n = 0: covariate of interest lies in the nuisance span")
    ay = snapshot.basis @ snapshot.y
    ay_norm = float(np.linalg.norm(ay))
    # same relative-zero convention as the rank cutoff
    if ay_norm <= _RANK_RTOL * float(np.linalg.norm(snapshot.y)):
        raise DataError("linreg: all-zero residual (y lies in the nuisance span)")
    u = ay / ay_norm
    b_hat = snapshot.b / b_norm
    c = float(b_hat @ u)
    pu = u - c * b_hat
    pu2 = float(pu @ pu)
    dof = snapshot.k - 1
    if pu2 <= 0.0:
        return (math.inf if c > 0 else -math.inf), dof, b_norm
    return c * math.sqrt(dof / pu2), dof, b_norm


def reg_log_evalue(snapshot: RegressionSnapshot, delta0: float, delta_plus: float) -> float:
    """Log process value; 1 (log 0) on uninformative steps (k < 2 or b_n = 0)."""
    if delta_plus == delta0:
        return 0.0
    try:
        t, dof, b_norm = reg_t_statistic(snapshot)
    except RegressionStartup:
        return 0.0
    return nct_logratio(t, dof, delta_plus * b_norm, delta0 * b_norm)


def _reg_statistic(snapshot: RegressionSnapshot) -> float:
    return reg_t_statistic(snapshot)[0]


# ---------------------------------------------------------------------------
# registry used by the model-agnostic core
# ---------------------------------------------------------------------------

class ModelOps(NamedTuple):
    update: callable
    statistic: callable
    log_evalue: callable


MODEL_OPS = {
    "t": ModelOps(t_update, t_statistic, t_log_evalue),
    "chisq": ModelOps(chisq_update, chisq_Q, chisq_log_evalue),
    "bernoulli": ModelOps(bern_update, bern_statistic, bern_log_evalue),
    "linreg": ModelOps(reg_update, _reg_statistic, reg_log_evalue),
}
