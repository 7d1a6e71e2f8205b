"""End-to-end halfspace learners for the two noise regimes.

The pipeline is shared: run projected SGD on the sigmoid surrogate,
collect every recorded iterate and its negation as candidates, then pick
the candidate with the smallest empirical zero-one error on a fresh
selection sample. The structural theory guarantees that approximate
stationarity at a suitable smoothing width forces a small angle to the
target (up to sign), and selection converts "one candidate is good" into
"the returned hypothesis is good".

Two scheduling modes are provided.

theoretical:
    The proof-driven schedule with all hidden constants set to one, using
    profile constants (density bound U, inner radius R, tail radius t).
    For the bounded regime with noise ceiling eta and accuracy eps:

        C1 = (U/R)^12,  C2 = R/U^2
        T     = C1 * d * t(eps/2)^8 / (eps^4 (1-2 eta)^10) * ln(1/delta)
        beta  = C2^2 * d * (1-2 eta)^3 * eps^2 / (t(eps/2)^4 * sqrt(T))
        sigma = C2 * sqrt(1-2 eta) * eps / t(eps/2)^2, capped at the
                sigmoid stationarity cap for the target angle
        N     = ceil(ln(T/delta) / (eps^2 (1-2 eta)^2))

    For the strong regime with margin slope c: C1 = U^12/R^18,
    C2 = R^(3/2)/U^2, T = C1*d*t(eps/2)^8/(eps^4 c^6)*ln(1/delta),
    beta = C2^2*d*c^3*eps^2/(t(eps/2)^4 sqrt(T)),
    sigma = C2*sqrt(c)*eps/t(eps/2)^2 with the strong cap, and
    N = ceil(ln(T/delta)/eps^2). The learner internally budgets for
    accuracy eps/2 (optimization and selection each get half), so each
    schedule is evaluated at eps/2.

practical:
    Desk-scale calibrated defaults: T = 2e5 * d / (eps^2 (1-2 eta)^2)
    capped at 1e6 (c replaces (1-2 eta) in the strong regime),
    beta = 1/sqrt(T), sigma = 0.25, and a Hoeffding-sized selection
    sample with constant 50. Any stationary point of the sigmoid
    surrogate inherits the structural guarantee, so hyperparameters that
    reach stationarity faster than the worst-case schedule are sound.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .geometry import BoundedProfile, sign_of
from .noise import BOUNDED_NOISE_KINDS, MassartOracle
from .psgd import PsgdConfig, Trajectory, _recorded_steps, psgd_run
from .rng import STREAM_SELECT
from .surrogate import SurrogateSpec
from .verify import lemma_sigma_cap

MODEL_MASSART = "massart"
MODEL_STRONG = "strong_massart"
MODES = ("theoretical", "practical")

PRACTICAL_STEPS_CAP = 1_000_000
PRACTICAL_STEPS_SCALE = 2.0e5
PRACTICAL_SIGMA = 0.25
PRACTICAL_SELECTION_SCALE = 50.0
DEFAULT_CANDIDATE_RECORDINGS = 50


@dataclass(frozen=True)
class LearnParams:
    """What the learner is allowed to assume, and how hard to try."""

    model: str
    eps: float
    profile: BoundedProfile
    delta: float = 0.1
    eta_bound: float | None = None   # bounded regime ceiling, in [0, 1/2)
    c_strong: float | None = None    # strong regime margin slope
    mode: str = "practical"
    budget: int | None = None        # refuse schedules whose T exceeds this
    record_every: int = 0            # 0 = auto (about 50 recordings)
    steps_override: int | None = None
    step_size_override: float | None = None
    sigma_override: float | None = None
    selection_override: int | None = None

    def __post_init__(self):
        if self.model not in (MODEL_MASSART, MODEL_STRONG):
            raise ValueError(f"unknown model {self.model!r}")
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"eps must lie in (0, 1), got {self.eps!r}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.model == MODEL_MASSART:
            if self.eta_bound is None or not (0.0 <= self.eta_bound < 0.5):
                raise ValueError(f"bounded regime needs eta_bound in [0, 1/2), got {self.eta_bound!r}")
            if self.c_strong is not None:
                raise ValueError("bounded regime must leave c_strong unset")
        else:
            if self.c_strong is None or not (0.0 < self.c_strong <= 1.0):
                raise ValueError(f"strong regime needs c_strong in (0, 1], got {self.c_strong!r}")
            if self.eta_bound is not None:
                raise ValueError("strong regime must leave eta_bound unset")


@dataclass(frozen=True)
class Schedule:
    steps: int
    step_size: float
    sigma: float
    selection_samples: int
    record_every: int
    theta_target: float
    sigma_cap: float

    @property
    def candidate_count(self) -> int:
        return 2 * _recorded_steps(self.steps, self.record_every).shape[0]


def _auto_record_every(steps: int, requested: int) -> int:
    if requested:
        return requested
    return max(1, math.ceil(steps / DEFAULT_CANDIDATE_RECORDINGS))


def _check_budget(steps: int, budget: int | None) -> None:
    if budget is not None and steps > budget:
        raise BudgetExceededError(
            f"scheduled iteration count {steps} exceeds the configured budget {budget}"
        )


def _selection_count(params: LearnParams, steps: int, record_every: int, gap_sq: float) -> int:
    """Hoeffding-style selection sample size; gap_sq is the squared
    resolution (eps*(1-2 eta))^2 or eps^2 the sample must distinguish."""
    if params.selection_override is not None:
        return params.selection_override
    if params.mode == "theoretical":
        return max(2, math.ceil(math.log(steps / params.delta) / gap_sq))
    candidates = 2 * _recorded_steps(steps, record_every).shape[0]
    return max(2, math.ceil(
        PRACTICAL_SELECTION_SCALE * math.log(candidates / params.delta) / gap_sq
    ))


def schedule_massart(params: LearnParams, dim: int) -> Schedule:
    """Hyperparameters for the bounded-noise learner in dimension dim."""
    if params.model != MODEL_MASSART:
        raise ValueError("schedule_massart needs a bounded-regime LearnParams")
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    prof = params.profile
    U, R = prof.density_bound, prof.inner_radius
    eta, delta = params.eta_bound, params.delta
    gap = 1.0 - 2.0 * eta

    if params.mode == "theoretical":
        eps = params.eps / 2.0  # half the budget to optimization, half to selection
        t = float(prof.tail_radius(eps / 2.0))
        c1 = (U / R) ** 12
        c2 = R / U**2
        steps = int(math.ceil(c1 * dim * t**8 / eps**4 / gap**10 * math.log(1.0 / delta)))
        theta_target = eps * gap / (U * t**2)
        sigma_cap = lemma_sigma_cap("sigmoid", prof, eta, theta_target)
        sigma = min(c2 * math.sqrt(gap) * eps / t**2, sigma_cap)
        beta = c2**2 * dim * gap**3 * eps**2 / (t**4 * math.sqrt(steps))
        gap_sq = (eps * gap) ** 2
    else:
        eps = params.eps
        steps = min(PRACTICAL_STEPS_CAP, int(math.ceil(PRACTICAL_STEPS_SCALE * dim / (eps**2 * gap**2))))
        theta_target = eps * gap / (U * float(prof.tail_radius(eps / 2.0)) ** 2)
        sigma_cap = lemma_sigma_cap("sigmoid", prof, eta, theta_target)
        sigma = PRACTICAL_SIGMA
        beta = 1.0 / math.sqrt(steps)
        gap_sq = (eps * gap) ** 2

    if params.steps_override is not None:
        steps = params.steps_override
    _check_budget(steps, params.budget)
    record_every = _auto_record_every(steps, params.record_every)
    return Schedule(
        steps=steps,
        step_size=params.step_size_override if params.step_size_override is not None else beta,
        sigma=params.sigma_override if params.sigma_override is not None else sigma,
        selection_samples=_selection_count(params, steps, record_every, gap_sq),
        record_every=record_every,
        theta_target=theta_target,
        sigma_cap=sigma_cap,
    )


def schedule_strong_massart(params: LearnParams, dim: int) -> Schedule:
    """Hyperparameters for the strong-regime learner in dimension dim."""
    if params.model != MODEL_STRONG:
        raise ValueError("schedule_strong_massart needs a strong-regime LearnParams")
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    prof = params.profile
    U, R = prof.density_bound, prof.inner_radius
    c, delta = params.c_strong, params.delta

    if params.mode == "theoretical":
        eps = params.eps / 2.0
        t = float(prof.tail_radius(eps / 2.0))
        c1 = U**12 / R**18
        c2 = R**1.5 / U**2
        steps = int(math.ceil(c1 * dim * t**8 / (eps**4 * c**6) * math.log(1.0 / delta)))
        theta_target = eps / (U * t**2)
        sigma_cap = lemma_sigma_cap("strong", prof, c, theta_target)
        sigma = min(c2 * math.sqrt(c) * eps / t**2, sigma_cap)
        beta = c2**2 * dim * c**3 * eps**2 / (t**4 * math.sqrt(steps))
        gap_sq = eps**2
    else:
        eps = params.eps
        steps = min(PRACTICAL_STEPS_CAP, int(math.ceil(PRACTICAL_STEPS_SCALE * dim / (eps**2 * c**2))))
        theta_target = eps / (U * float(prof.tail_radius(eps / 2.0)) ** 2)
        sigma_cap = lemma_sigma_cap("strong", prof, c, theta_target)
        sigma = PRACTICAL_SIGMA
        beta = 1.0 / math.sqrt(steps)
        gap_sq = eps**2

    if params.steps_override is not None:
        steps = params.steps_override
    _check_budget(steps, params.budget)
    record_every = _auto_record_every(steps, params.record_every)
    return Schedule(
        steps=steps,
        step_size=params.step_size_override if params.step_size_override is not None else beta,
        sigma=params.sigma_override if params.sigma_override is not None else sigma,
        selection_samples=_selection_count(params, steps, record_every, gap_sq),
        record_every=record_every,
        theta_target=theta_target,
        sigma_cap=sigma_cap,
    )


def schedule_for(params: LearnParams, dim: int) -> Schedule:
    if params.model == MODEL_MASSART:
        return schedule_massart(params, dim)
    return schedule_strong_massart(params, dim)


def _count_disagreements(candidates: np.ndarray, xs: np.ndarray, ys: np.ndarray, wrong: np.ndarray) -> None:
    preds = sign_of(xs @ candidates.T)
    wrong += np.sum(preds != ys[:, None], axis=0)


def select_hypothesis(
    candidates: np.ndarray, xs: np.ndarray, ys: np.ndarray, chunk: int = 1 << 15
) -> tuple[int, float, np.ndarray]:
    """Index, error, and full error vector of the empirically best candidate.

    Error is the mean zero-one disagreement between sign(<c, x>) and y.
    The argmin takes the first minimizer, so candidate order encodes the
    tie-breaking policy.
    """
    candidates = np.asarray(candidates, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if candidates.shape[0] == 0:
        raise ValueError("candidate list is empty")
    n = xs.shape[0]
    if n == 0:
        raise ValueError("selection sample is empty")
    wrong = np.zeros(candidates.shape[0])
    for lo in range(0, n, chunk):
        _count_disagreements(candidates, xs[lo : lo + chunk], ys[lo : lo + chunk], wrong)
    errors = wrong / n
    idx = int(np.argmin(errors))
    return idx, float(errors[idx]), errors


def excess_to_target_error(excess: float, eta_bound: float) -> float:
    """Bound on disagreement with the target from excess error over OPT.

    In the bounded regime every disagreement point contributes at least
    (1 - 2*eta_bound) excess error, so disagreement <= excess / (1-2 eta).
    """
    if not (0.0 <= eta_bound < 0.5):
        raise ValueError(f"eta_bound must lie in [0, 1/2), got {eta_bound!r}")
    return excess / (1.0 - 2.0 * eta_bound)


@dataclass(frozen=True)
class LearnReport:
    chosen: np.ndarray
    chosen_index: int
    chosen_sign: int              # +1 if a recorded iterate, -1 if its negation
    chosen_step: int              # PSGD step index of the underlying iterate
    empirical_error: float
    candidate_errors: np.ndarray
    candidate_count: int
    schedule: Schedule
    samples_used: int
    trajectory: Trajectory
    wall_time_s: float


# Examples are pulled from the oracle in batches of this size during PSGD,
# and the selection sample streams through in larger slabs.
_STREAM_CHUNK = 8192
_SELECT_CHUNK = 1 << 17


def _massart_compatible(kind: str) -> bool:
    return kind in BOUNDED_NOISE_KINDS


def learn(oracle: MassartOracle, params: LearnParams, psgd_seed: int = 0) -> LearnReport:
    """Run the full pipeline against a noisy example oracle.

    The PSGD stream consumes the oracle's own substreams (one example per
    step); the selection sample comes from a derived oracle, so the two
    are disjoint by construction. Total sample usage is exactly
    steps + selection_samples.
    """
    t0 = time.perf_counter()
    kind = oracle.strategy.kind
    if params.model == MODEL_MASSART and not _massart_compatible(kind):
        raise ValueError(f"bounded-regime learner cannot consume strategy kind {kind!r}")
    if params.model == MODEL_STRONG and kind != "strong_massart_max":
        raise ValueError(f"strong-regime learner needs strategy strong_massart_max, got {kind!r}")

    dim = oracle.marginal.dim
    sched = schedule_for(params, dim)
    sigma = sched.sigma
    spec = SurrogateSpec(kind="sigmoid", sigma=sigma)  # validates the width

    state = {"xs": None, "ys": None, "pos": 0}
    g_buf = np.empty(dim)
    t_buf = np.empty(dim)

    def grad_fn(w, _rng):
        pos = state["pos"]
        xs = state["xs"]
        if xs is None or pos >= xs.shape[0]:
            batch = oracle.draw(_STREAM_CHUNK)
            xs = batch.xs
            state["xs"] = xs
            state["ys"] = batch.ys
            state["pos"] = 0
            pos = 0
        x = xs[pos]
        y = state["ys"][pos]
        state["pos"] = pos + 1
        m = float(x @ w)  # iterates stay unit norm, so this is the margin
        q = math.exp(-abs(m) / sigma)
        coef = -y * q / ((1.0 + q) ** 2 * sigma)
        np.multiply(x, coef, out=g_buf)
        np.multiply(w, coef * m, out=t_buf)
        np.subtract(g_buf, t_buf, out=g_buf)
        return g_buf

    config = PsgdConfig(
        steps=sched.steps,
        step_size=sched.step_size,
        seed=psgd_seed,
        record_every=sched.record_every,
    )
    trajectory = psgd_run(grad_fn, config, dim=dim)

    # Positive block first, each block in step order: the first-argmin
    # selection then prefers +w over -w and earlier steps over later ones.
    candidates = np.vstack([trajectory.iterates, -trajectory.iterates])
    sel_oracle = oracle.spawn(STREAM_SELECT)
    wrong = np.zeros(candidates.shape[0])
    remaining = sched.selection_samples
    while remaining > 0:
        sel = sel_oracle.draw(min(remaining, _SELECT_CHUNK))
        _count_disagreements(candidates, sel.xs, sel.ys, wrong)
        remaining -= len(sel)
    errors = wrong / sched.selection_samples
    idx = int(np.argmin(errors))
    err = float(errors[idx])
    k = trajectory.iterates.shape[0]
    sign = 1 if idx < k else -1
    step = int(trajectory.step_indices[idx % k])

    return LearnReport(
        chosen=candidates[idx],
        chosen_index=idx,
        chosen_sign=sign,
        chosen_step=step,
        empirical_error=err,
        candidate_errors=errors,
        candidate_count=candidates.shape[0],
        schedule=sched,
        samples_used=sched.steps + sched.selection_samples,
        trajectory=trajectory,
        wall_time_s=time.perf_counter() - t0,
    )
