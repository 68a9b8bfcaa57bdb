"""Estimator-style wrappers over the functional pipeline.

Each test is exposed as an estimator with ``fit`` / ``partial_fit`` and the
usual ``get_params`` / ``set_params`` round trip, so the tests compose with
standard tooling (cloning, grid iteration, pipelines that end in a test).
There is no ``predict``/``transform``: a sequential test makes one running
decision about the stream, not per-sample outputs, so the fitted result lives
in trailing-underscore attributes instead:

    n_          observations absorbed
    log_e_      current natural-log e-value
    e_value_    the same on the linear scale (inf if it overflows)
    statistic_  current model statistic (NaN while undefined)
    rejected_   whether the e-value ever reached 1/alpha
    tau_        step of the first crossing (None if never)
    trajectory_ full per-step Trajectory

``fit`` starts a fresh stream; ``partial_fit`` continues the current one, so
data may arrive in arbitrary batch sizes with identical results.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from . import core
from .core import EffectSpec, PriorGrid, StoppingRule, Trajectory, TrajectoryRecord
from .errors import DataError


class _BaseSequentialTest(BaseEstimator):
    _model: str

    def _null_value(self) -> float:
        raise NotImplementedError

    def _alternative(self) -> tuple:
        raise NotImplementedError

    def _make_spec(self) -> EffectSpec:
        point, prior = self._alternative()
        if prior is not None and not isinstance(prior, PriorGrid):
            prior = PriorGrid(tuple(prior))
        return EffectSpec(delta0=self._null_value(), delta_plus=point, prior=prior)

    def _reset(self) -> None:
        self._spec = self._make_spec()
        self._rule = StoppingRule(alpha=self.alpha)
        self._state = core.initial_state(self._model)
        self.trajectory_ = Trajectory()
        self.rejected_ = False
        self.tau_ = None
        self._sync()

    def _sync(self) -> None:
        self.n_ = self._state.n
        self.log_e_ = self._state.log_e
        self.e_value_ = core.evalue(self._state)
        self.statistic_ = core.statistic(self._state)

    def _observations(self, X, y):
        X = check_array(X, ensure_2d=False, dtype=float, ensure_min_samples=1)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise DataError(
                    f"{type(self).__name__} expects a single column of outcomes, "
                    f"got shape {X.shape}"
                )
            X = X[:, 0]
        return X.tolist()

    def partial_fit(self, X, y=None):
        if not hasattr(self, "_state"):
            self._reset()
        for obs in self._observations(X, y):
            self._state = core.step(self._state, obs, self._spec)
            self.rejected_ = self.rejected_ or core.should_reject(self._state, self._rule)
            if self.rejected_ and self.tau_ is None:
                self.tau_ = self._state.n
            self.trajectory_.append(
                TrajectoryRecord(
                    n=self._state.n,
                    statistic=core.statistic(self._state),
                    log_e=self._state.log_e,
                    rejected=self.rejected_,
                )
            )
        self._sync()
        return self

    def fit(self, X, y=None):
        self._reset()
        return self.partial_fit(X, y)


class SequentialTTest(_BaseSequentialTest):
    """Anytime-valid one-sided test of effect size delta = mu/sigma <= delta0.

    Scale-invariant: the stream is coarsened to Y_i/|Y_1| and the e-value is
    a noncentral-t density ratio at the running t-statistic, so multiplying
    all outcomes by a positive constant changes nothing.
    """

    _model = "t"

    def __init__(self, delta0=0.0, delta_plus=None, prior=None, alpha=0.05):
        self.delta0 = delta0
        self.delta_plus = delta_plus
        self.prior = prior
        self.alpha = alpha

    def _null_value(self):
        return self.delta0

    def _alternative(self):
        return self.delta_plus, self.prior


class SequentialChiSquareTest(_BaseSequentialTest):
    """Anytime-valid one-sided test of the Gaussian scale (sigma <= sigma0).

    Location-invariant: the stream is coarsened to Y_i - Y_1; the e-value is
    a closed-form function of the unnormalised empirical variance.
    """

    _model = "chisq"

    def __init__(self, sigma0=1.0, sigma_plus=None, prior=None, alpha=0.05):
        self.sigma0 = sigma0
        self.sigma_plus = sigma_plus
        self.prior = prior
        self.alpha = alpha

    def _null_value(self):
        return self.sigma0

    def _alternative(self):
        return self.sigma_plus, self.prior


class SequentialBernoulliTest(_BaseSequentialTest):
    """Anytime-valid one-sided Bernoulli test, agnostic to which label is which.

    Coarsens to agreement with the first outcome; parameters are canonicalized
    to [1/2, 1) (a success probability p below 1/2 is the same stream law as
    1 - p).
    """

    _model = "bernoulli"

    def __init__(self, theta0=0.5, theta_plus=None, prior=None, alpha=0.05):
        self.theta0 = theta0
        self.theta_plus = theta_plus
        self.prior = prior
        self.alpha = alpha

    def _null_value(self):
        return self.theta0

    def _alternative(self):
        return self.theta_plus, self.prior


class SequentialRegressionTest(_BaseSequentialTest):
    """Anytime-valid one-sided test of a regression coefficient of interest.

    fit(X, y): y holds the outcomes; the first column of X is the covariate
    under test and any remaining columns are nuisance covariates projected
    out through an orthonormal null-space basis recomputed each step.
    """

    _model = "linreg"

    def __init__(self, delta0=0.0, delta_plus=None, prior=None, alpha=0.05):
        self.delta0 = delta0
        self.delta_plus = delta_plus
        self.prior = prior
        self.alpha = alpha

    def _null_value(self):
        return self.delta0

    def _alternative(self):
        return self.delta_plus, self.prior

    def _observations(self, X, y):
        if y is None:
            raise DataError("SequentialRegressionTest.fit requires outcomes y")
        X = check_array(X, ensure_2d=True, dtype=float)
        y = check_array(y, ensure_2d=False, dtype=float)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        return [(float(y[i]), float(X[i, 0]), np.array(X[i, 1:])) for i in range(X.shape[0])]
