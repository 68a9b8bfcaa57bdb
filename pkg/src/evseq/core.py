"""Model-agnostic e-process pipeline.

An e-process here is a nonnegative process whose value at any stopping time
has expectation at most 1 under every null distribution.  The pipeline is
pure-functional: ``initial_state`` -> repeated ``step`` -> ``evalue`` /
``should_reject``, with all model specifics behind the registry in
``models``.  Values are carried in log space; ``evalue`` exponentiates at
the edge and saturates to ``inf`` rather than overflowing.

Rejecting when the e-value reaches 1/alpha gives a level-alpha sequential
test valid at arbitrary data-dependent stopping times, including stopping
rules chosen adversarially after seeing the data so far.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import models
from .errors import ConfigError, ContractError, StateError

# prior atoms must carry strictly positive weight summing to 1 within this
_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PriorGrid:
    """Finite discrete prior over alternative effect values.

    atoms is a tuple of (delta, weight) pairs with strictly positive weights
    summing to 1 within 1e-12.  Use ``PriorGrid.normalized`` to build one
    from unnormalised weights.
    """

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(d), float(w)) for d, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ContractError("PriorGrid needs at least one atom")
        for d, w in atoms:
            if not (math.isfinite(d) and math.isfinite(w)):
                raise ContractError(f"prior atom ({d}, {w}) must be finite")
            if w <= 0.0:
                raise ContractError(f"prior weight {w} at delta={d} must be strictly positive")
        total = math.fsum(w for _, w in atoms)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ContractError(
                f"prior weights sum to {total!r}, not 1 (tolerance {_WEIGHT_SUM_TOL})"
            )

    @classmethod
    def normalized(cls, atoms: Iterable[tuple[float, float]]) -> "PriorGrid":
        atoms = [(float(d), float(w)) for d, w in atoms]
        total = math.fsum(w for _, w in atoms)
        if total <= 0.0 or not math.isfinite(total):
            raise ContractError(f"prior weights must have a positive finite sum, got {total!r}")
        return cls(tuple((d, w / total) for d, w in atoms))


@dataclass(frozen=True)
class EffectSpec:
    """Null boundary delta0 plus a point alternative or a prior over them.

    Exactly one of delta_plus / prior must be given.  Every prior atom must
    sit at or above delta0, otherwise the mixture is not a valid e-process
    for the one-sided null.  A point alternative below delta0 is permitted
    (it is needed to exhibit processes whose expectation exceeds 1) but voids
    the validity guarantee; construction warns and ``guarantee_void`` is True.
    """

    delta0: float
    delta_plus: Optional[float] = None
    prior: Optional[PriorGrid] = None

    def __post_init__(self):
        if not (isinstance(self.delta0, (int, float)) and math.isfinite(self.delta0)):
            raise ContractError(f"delta0 must be a finite number, got {self.delta0!r}")
        object.__setattr__(self, "delta0", float(self.delta0))
        if (self.delta_plus is None) == (self.prior is None):
            raise ContractError("specify exactly one of delta_plus or prior")
        if self.delta_plus is not None:
            if not (isinstance(self.delta_plus, (int, float)) and math.isfinite(self.delta_plus)):
                raise ContractError(f"delta_plus must be a finite number, got {self.delta_plus!r}")
            object.__setattr__(self, "delta_plus", float(self.delta_plus))
            if self.delta_plus < self.delta0:
                warnings.warn(
                    f"alternative delta_plus={self.delta_plus} lies below the null boundary "
                    f"delta0={self.delta0}; the process is not an e-process for this null "
                    "and the anytime-valid guarantee is void",
                    UserWarning,
                    stacklevel=2,
                )
        else:
            bad = [d for d, _ in self.prior.atoms if d < self.delta0]
            if bad:
                raise ContractError(
                    f"prior atoms {bad} lie below the null boundary delta0={self.delta0}; "
                    "a mixture over such alternatives is not an e-process for the null"
                )

    @property
    def guarantee_void(self) -> bool:
        return self.delta_plus is not None and self.delta_plus < self.delta0


@dataclass(frozen=True)
class StoppingRule:
    """Reject once the e-value reaches 1/alpha (threshold crossing included)."""

    alpha: float

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float)) and 0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie strictly between 0 and 1, got {self.alpha!r}")
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def log_threshold(self) -> float:
        return -math.log(self.alpha)


@dataclass(frozen=True)
class EProcessState:
    """Process state after n observations; log_e is exactly 0 at n = 0."""

    model: str
    n: int
    log_e: float
    model_state: object = None


def initial_state(model: str) -> EProcessState:
    if model not in models.MODEL_OPS:
        raise ConfigError(
            f"unknown model {model!r}; available: {sorted(models.MODEL_OPS)}"
        )
    return EProcessState(model=model, n=0, log_e=0.0, model_state=None)


def mixture_log_evalue(component_log_es: Sequence[float], prior: PriorGrid) -> float:
    """log of the prior-weighted average of component e-values.

    Computed by a shifted log-sum-exp so the mixture never overflows even
    when individual components do.
    """
    if len(component_log_es) != len(prior.atoms):
        raise ContractError(
            f"{len(component_log_es)} component values for {len(prior.atoms)} prior atoms"
        )
    shifted = [math.log(w) + le for le, (_, w) in zip(component_log_es, prior.atoms)]
    m = max(shifted)
    if m == -math.inf or m == math.inf:
        return m
    return m + math.log(math.fsum(math.exp(s - m) for s in shifted))


def _log_evalue(ops: models.ModelOps, model_state, spec: EffectSpec) -> float:
    if spec.prior is None:
        return ops.log_evalue(model_state, spec.delta0, spec.delta_plus)
    components = [ops.log_evalue(model_state, spec.delta0, d) for d, _ in spec.prior.atoms]
    return mixture_log_evalue(components, spec.prior)


def step(state: EProcessState, observation, spec: EffectSpec) -> EProcessState:
    """Absorb one observation and return the new state.

    The log e-value is recomputed in full from the updated sufficient
    statistic, so numerical error does not accumulate across steps.
    """
    ops = models.MODEL_OPS[state.model]
    model_state = ops.update(state.model_state, observation)
    return EProcessState(
        model=state.model,
        n=state.n + 1,
        log_e=_log_evalue(ops, model_state, spec),
        model_state=model_state,
    )


def run(model: str, observations: Iterable, spec: EffectSpec) -> EProcessState:
    """Fold a whole stream; convenience wrapper over ``step``."""
    state = initial_state(model)
    for obs in observations:
        state = step(state, obs, spec)
    return state


def evalue(state: EProcessState) -> float:
    """e-value on the natural scale; saturates to inf instead of overflowing."""
    try:
        return math.exp(state.log_e)
    except OverflowError:
        return math.inf


def statistic(state: EProcessState) -> float:
    """Current model statistic, NaN while it is not yet defined."""
    if state.n == 0:
        return math.nan
    try:
        return float(models.MODEL_OPS[state.model].statistic(state.model_state))
    except StateError:
        return math.nan


def should_reject(state: EProcessState, rule: StoppingRule) -> bool:
    return state.log_e >= rule.log_threshold


@dataclass(frozen=True)
class TrajectoryRecord:
    n: int
    statistic: float
    log_e: float
    rejected: bool


@dataclass
class Trajectory:
    """Ordered per-step records with the decision latched once made.

    Appends enforce the two structural invariants: n increases by exactly 1
    and ``rejected`` never reverts to False after becoming True (the test
    stops sampling; the decision stands whatever comes later).
    """

    records: list[TrajectoryRecord] = field(default_factory=list)

    def append(self, record: TrajectoryRecord) -> None:
        if self.records:
            last = self.records[-1]
            if record.n != last.n + 1:
                raise ContractError(f"trajectory step n={record.n} after n={last.n}")
            if last.rejected and not record.rejected:
                raise ContractError("rejected reverted to False; the decision is latched")
        elif record.n != 1:
            raise ContractError(f"trajectory must start at n=1, got n={record.n}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def first_crossing(self) -> Optional[int]:
        """Smallest n with rejected=True, None if never crossed."""
        for rec in self.records:
            if rec.rejected:
                return rec.n
        return None


def run_trajectory(
    model: str, observations: Iterable, spec: EffectSpec, rule: StoppingRule
) -> Trajectory:
    """Run a stream to exhaustion, recording every step with a latched decision."""
    traj = Trajectory()
    state = initial_state(model)
    rejected = False
    for obs in observations:
        state = step(state, obs, spec)
        rejected = rejected or should_reject(state, rule)
        traj.append(
            TrajectoryRecord(n=state.n, statistic=statistic(state), log_e=state.log_e, rejected=rejected)
        )
    return traj
