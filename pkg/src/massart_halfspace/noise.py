"""Label-noise adversaries and the noisy example oracle.

A noise strategy fixes a measurable flip-rate function eta(x). The
bounded menu keeps eta(x) <= eta_bound < 1/2 everywhere (the classic
bounded instance-dependent regime); `strong_massart_max` instead
saturates the margin-dependent ceiling eta(x) = max(1/2 - c*|<w*,x>|, 0),
which approaches 1/2 arbitrarily close to the target boundary.

`MassartOracle.draw` samples points from a marginal substream and flips
the clean labels sign(<w*, x>) on a second, independent substream. One
uniform is consumed per example regardless of strategy, so oracles that
differ only in strategy see bitwise identical point sequences. That
pairing is what lets experiments attribute outcome differences to the
adversary alone.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import MarginalSampler
from .geometry import require_unit, sign_of
from .rng import STREAM_FLIP, STREAM_OPT, STREAM_X, derive_seed, make_rng

BOUNDED_NOISE_KINDS = ("none", "constant", "boundary_concentrated", "random_measurable")
NOISE_KINDS = BOUNDED_NOISE_KINDS + ("strong_massart_max",)


@dataclass(frozen=True)
class NoiseStrategy:
    """Configuration of one flip-rate function.

    kind "none" ignores eta_bound when computing rates but may still carry
    a non-zero bound: the bound then documents which adversary class the
    strategy is being compared against (every rate is trivially below it).
    """

    kind: str
    eta_bound: float = 0.0
    c_strong: float = 1.0
    band: float = 0.0
    hash_seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}, expected one of {NOISE_KINDS}")
        if self.kind == "strong_massart_max":
            if not (math.isfinite(self.c_strong) and self.c_strong > 0.0):
                raise ValueError(f"c_strong must be positive, got {self.c_strong!r}")
        else:
            if not (math.isfinite(self.eta_bound) and 0.0 <= self.eta_bound < 0.5):
                raise ValueError(f"eta_bound must lie in [0, 1/2), got {self.eta_bound!r}")
        if self.kind == "boundary_concentrated" and not (
            math.isfinite(self.band) and self.band > 0.0
        ):
            raise ValueError(f"boundary_concentrated needs a positive band, got {self.band!r}")
        if self.kind == "random_measurable" and self.hash_seed < 0:
            raise ValueError("hash_seed must be non-negative")


def _hash_unit_floats(xs: np.ndarray, hash_seed: int) -> np.ndarray:
    """Deterministic map from the bit pattern of each row to [0, 1)."""
    key = int(hash_seed).to_bytes(8, "little")
    out = np.empty(xs.shape[0], dtype=np.float64)
    contiguous = np.ascontiguousarray(xs, dtype=np.float64)
    for i in range(contiguous.shape[0]):
        digest = hashlib.blake2b(contiguous[i].tobytes(), key=key, digest_size=8).digest()
        out[i] = int.from_bytes(digest, "little") / 2.0**64
    return out


def noise_rates(strategy: NoiseStrategy, target: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Flip rate eta(x) for each row of xs against the target normal."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    kind = strategy.kind
    if kind == "none":
        return np.zeros(xs.shape[0])
    if kind == "constant":
        return np.full(xs.shape[0], strategy.eta_bound)
    if kind == "boundary_concentrated":
        margins = np.abs(xs @ target)
        return np.where(margins <= strategy.band, strategy.eta_bound, 0.0)
    if kind == "random_measurable":
        return strategy.eta_bound * _hash_unit_floats(xs, strategy.hash_seed)
    # strong_massart_max
    margins = np.abs(xs @ target)
    return np.maximum(0.5 - strategy.c_strong * margins, 0.0)


@dataclass(frozen=True)
class Draw:
    """A batch of noisy labeled examples plus the flip bookkeeping."""

    xs: np.ndarray       # (n, d) points
    ys: np.ndarray       # (n,) noisy labels in {-1, +1}
    flipped: np.ndarray  # (n,) True where the clean label was inverted

    def clean_ys(self) -> np.ndarray:
        return np.where(self.flipped, -self.ys, self.ys)

    def __len__(self) -> int:
        return self.xs.shape[0]


@dataclass
class MassartOracle:
    """Noisy example oracle for a fixed target halfspace.

    Owns two substreams derived from `seed`: one drives the marginal
    sampler, the other the flip decisions. `spawn` derives an
    independent oracle (same configuration, disjoint streams) for
    parallel trials or held-out selection samples.
    """

    target: np.ndarray
    strategy: NoiseStrategy
    marginal: MarginalSampler
    seed: int = 0
    _x_rng: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)
    _flip_rng: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)
    _opt_rng: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.target = require_unit(self.target, "target")
        if self.target.shape[0] != self.marginal.dim:
            raise ValueError(
                f"target dimension {self.target.shape[0]} does not match "
                f"marginal dimension {self.marginal.dim}"
            )

    def _streams(self):
        if self._x_rng is None:
            self._x_rng = make_rng(self.seed, STREAM_X)
            self._flip_rng = make_rng(self.seed, STREAM_FLIP)
        return self._x_rng, self._flip_rng

    def spawn(self, *path: int) -> "MassartOracle":
        return MassartOracle(
            target=self.target,
            strategy=self.strategy,
            marginal=self.marginal,
            seed=derive_seed(self.seed, *path),
        )

    def draw(self, n: int) -> Draw:
        """Draw n noisy labeled examples, advancing the oracle streams."""
        x_rng, flip_rng = self._streams()
        xs = self.marginal.sample(n, rng=x_rng)
        clean = sign_of(xs @ self.target)
        rates = noise_rates(self.strategy, self.target, xs)
        flips = flip_rng.random(n) < rates
        ys = np.where(flips, -clean, clean)
        return Draw(xs=xs, ys=ys, flipped=flips)

    def opt_error(self, n: int) -> tuple[float, float]:
        """Monte-Carlo estimate of the best achievable error E[eta(x)].

        Returns (estimate, standard error). Uses the rate function on a
        dedicated substream of fresh points; no labels are drawn.
        """
        if n < 2:
            raise ValueError("opt_error needs at least 2 samples")
        if self._opt_rng is None:
            self._opt_rng = make_rng(self.seed, STREAM_OPT)
        xs = self.marginal.sample(n, rng=self._opt_rng)
        rates = noise_rates(self.strategy, self.target, xs)
        est = float(np.mean(rates))
        stderr = float(np.std(rates, ddof=1) / math.sqrt(n))
        return est, stderr
