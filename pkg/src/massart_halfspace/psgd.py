"""Projected stochastic gradient descent on the unit sphere.

Each step takes a stochastic gradient g at the current unit iterate w,
moves to v = w - step_size * g, and projects back to the sphere,
w <- v / ||v||. Because the surrogate gradients are orthogonal to w, the
pre-projection norm satisfies ||v|| >= 1, so the projection never blows a
step up.

For a smooth bounded objective the guarantees are parameter-free in
shape: with step_size sqrt(2 * value_range / (smoothness * grad_sq_bound
* steps)) the average squared gradient norm along the trajectory is at
most sqrt(smoothness * grad_sq_bound * value_range / (2 * steps)), and

    steps = (2 * smoothness * grad_sq_bound * value_range
             + 8 * mean_grad_sq_bound^2 * ln(1/delta)) / eps^4

suffices for some iterate to have true gradient norm at most eps with
probability 1 - delta. Here grad_sq_bound bounds E||g||^2 and
mean_grad_sq_bound bounds ||E g||^2 over the feasible set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PsgdDivergenceError
from .rng import STREAM_PSGD, make_rng


@dataclass(frozen=True)
class PsgdConfig:
    steps: int
    step_size: float
    seed: int = 0
    record_every: int = 1
    record_grad_norms: bool = False

    def __post_init__(self):
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if not (math.isfinite(self.step_size) and self.step_size > 0.0):
            raise ValueError(f"step_size must be positive, got {self.step_size!r}")
        if not isinstance(self.record_every, int) or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every!r}")


@dataclass(frozen=True)
class Trajectory:
    """Recorded iterates: step 0 (the start), every record_every-th step,
    and always the final step."""

    step_indices: np.ndarray  # (k,) int64, strictly increasing, starts at 0
    iterates: np.ndarray      # (k, d), rows have unit norm
    grad_norms: np.ndarray | None = None  # stochastic ||g|| at each recorded step (nan at 0)

    def __len__(self) -> int:
        return int(self.step_indices.shape[0])

    def final(self) -> np.ndarray:
        return self.iterates[-1]


def _recorded_steps(steps: int, record_every: int) -> np.ndarray:
    idx = list(range(0, steps + 1, record_every))
    if idx[-1] != steps:
        idx.append(steps)
    return np.asarray(idx, dtype=np.int64)


def _start_iterate(w0, dim_hint: int | None) -> np.ndarray:
    if w0 is None:
        if dim_hint is None:
            raise ValueError("w0 is required when the dimension cannot be inferred")
        w = np.zeros(dim_hint)
        w[0] = 1.0
        return w
    w = np.asarray(w0, dtype=np.float64).copy()
    norm = float(np.linalg.norm(w))
    if not (math.isfinite(norm) and abs(norm - 1.0) <= 1e-9):
        raise ValueError(f"w0 must have unit norm, got {norm!r}")
    return w


def psgd_run(grad_oracle, config: PsgdConfig, w0=None, dim: int | None = None) -> Trajectory:
    """Run projected SGD and return the recorded trajectory.

    grad_oracle(w, rng) must return a finite gradient vector; the rng is
    a dedicated Philox substream of config.seed, advanced only by the
    oracle. A non-finite or zero-norm update aborts with
    PsgdDivergenceError carrying the offending step index.
    """
    w = _start_iterate(w0, dim)
    rng = make_rng(config.seed, STREAM_PSGD)
    steps, beta = config.steps, config.step_size
    record = _recorded_steps(steps, config.record_every)
    iterates = np.empty((record.shape[0], w.shape[0]))
    grad_norms = np.full(record.shape[0], np.nan) if config.record_grad_norms else None
    iterates[0] = w
    slot = 1
    next_record = int(record[1]) if record.shape[0] > 1 else -1
    for i in range(1, steps + 1):
        g = grad_oracle(w, rng)
        v = w - beta * g
        nv = math.sqrt(float(v @ v))
        if not (nv > 0.0 and math.isfinite(nv)):
            detail = "zero-norm update" if nv == 0.0 else "non-finite gradient or update"
            raise PsgdDivergenceError(step=i, detail=detail)
        w = v / nv
        if i == next_record:
            iterates[slot] = w
            if grad_norms is not None:
                grad_norms[slot] = float(np.linalg.norm(g))
            slot += 1
            next_record = int(record[slot]) if slot < record.shape[0] else -1
    return Trajectory(step_indices=record, iterates=iterates, grad_norms=grad_norms)


def psgd_run_batch(batch_oracle, config: PsgdConfig, w0s: np.ndarray) -> Trajectory:
    """Lockstep projected SGD from many starts at once.

    Applies the exact update of `psgd_run` to every row of w0s in
    parallel via array arithmetic; batch_oracle(W, rng) must return one
    gradient per row. Intended for experiment throughput (many seeds or
    trials of the same configuration); the recorded `iterates` have shape
    (k, m, d) for m starts.
    """
    W = np.asarray(w0s, dtype=np.float64).copy()
    if W.ndim != 2:
        raise ValueError(f"w0s must be (m, d), got shape {W.shape}")
    norms = np.linalg.norm(W, axis=1)
    if not np.all(np.abs(norms - 1.0) <= 1e-9):
        raise ValueError("every start must have unit norm")
    rng = make_rng(config.seed, STREAM_PSGD)
    steps, beta = config.steps, config.step_size
    record = _recorded_steps(steps, config.record_every)
    iterates = np.empty((record.shape[0],) + W.shape)
    iterates[0] = W
    slot = 1
    next_record = int(record[1]) if record.shape[0] > 1 else -1
    for i in range(1, steps + 1):
        G = batch_oracle(W, rng)
        V = W - beta * G
        nv = np.sqrt(np.einsum("ij,ij->i", V, V))
        bad = ~(np.isfinite(nv) & (nv > 0.0))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise PsgdDivergenceError(step=i, detail=f"row {row} produced a degenerate update")
        W = V / nv[:, None]
        if i == next_record:
            iterates[slot] = W
            slot += 1
            next_record = int(record[slot]) if slot < record.shape[0] else -1
    return Trajectory(step_indices=record, iterates=iterates, grad_norms=None)


def theoretical_step_size(
    smoothness: float, grad_sq_bound: float, value_range: float, steps: int
) -> float:
    """sqrt(2 * value_range / (smoothness * grad_sq_bound * steps))."""
    for name, val in (("smoothness", smoothness), ("grad_sq_bound", grad_sq_bound),
                      ("value_range", value_range)):
        if not (math.isfinite(val) and val > 0.0):
            raise ValueError(f"{name} must be positive, got {val!r}")
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps!r}")
    return math.sqrt(2.0 * value_range / (smoothness * grad_sq_bound * steps))


def theoretical_iteration_count(
    smoothness: float,
    grad_sq_bound: float,
    value_range: float,
    mean_grad_sq_bound: float,
    eps: float,
    delta: float,
) -> int:
    """Steps guaranteeing a trajectory point with gradient norm <= eps
    with probability at least 1 - delta."""
    if not (0.0 < eps):
        raise ValueError(f"eps must be positive, got {eps!r}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if mean_grad_sq_bound < 0.0:
        raise ValueError(f"mean_grad_sq_bound must be non-negative, got {mean_grad_sq_bound!r}")
    numerator = (
        2.0 * smoothness * grad_sq_bound * value_range
        + 8.0 * mean_grad_sq_bound**2 * math.log(1.0 / delta)
    )
    return int(math.ceil(numerator / eps**4))


@dataclass(frozen=True)
class StationarityCertificate:
    step_index: int
    grad_norm: float
    stderr: float


def stationarity_certificate(trajectory: Trajectory, grad_norm_estimator) -> StationarityCertificate:
    """Most stationary recorded iterate, by an externally supplied estimator.

    grad_norm_estimator(w) -> (norm_estimate, stderr). Ties break toward
    the smallest step index.
    """
    if trajectory.iterates.ndim != 2:
        raise ValueError("stationarity_certificate expects a single-run trajectory")
    best = None
    for idx, w in zip(trajectory.step_indices, trajectory.iterates):
        norm, stderr = grad_norm_estimator(w)
        if best is None or norm < best[1]:
            best = (int(idx), float(norm), float(stderr))
    return StationarityCertificate(step_index=best[0], grad_norm=best[1], stderr=best[2])
