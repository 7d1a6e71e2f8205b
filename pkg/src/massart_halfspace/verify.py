"""Monte-Carlo certification of the structural gradient-norm lemmas.

The lemmas state that for every admissible noise function and every unit
vector w at angle theta from the target (inside the window
(theta, pi - theta)), the population gradient of the smoothed surrogate
has norm at least an explicit floor, provided the smoothing width sigma
stays under an explicit cap. `lemma_sigma_cap` and `lemma_gradient_floor`
hold those closed forms; `verify_stationary_gap` estimates the actual
gradient norm by Monte Carlo and applies a one-sided statistical test
against the floor. An estimate significantly below the floor refutes the
claimed bound; the test can never prove the universally quantified
statement, only fail to falsify it, which is the usual shape of a
numerical certification.

Estimator design. Labels are integrated out analytically: conditioned on
x, the mean gradient contribution is -(1 - 2 eta(x)) sign(<w*, x>) times
the derivative weight at the margin (the surrogate derivatives are even,
so the label only contributes its mean 1 - 2 eta(x)). Every component of
the mean gradient orthogonal to the (w, w*) plane vanishes for a
rotationally symmetric marginal, and the component along w is zero
pointwise, so the whole norm sits in one scalar: the coefficient of the
in-plane direction b1 orthogonal to w (chosen so <w*, b1> = sin theta).
Projecting the mean onto a fixed direction can only shrink it, so this
scalar is a sound lower bound even without symmetry. The two in-plane
coordinates are drawn from the closed-form projected density, with the
w-coordinate importance-sampled from a Laplace mixture matched to the
derivative's width sigma; weights are bounded by 1/(1 - mixture_weight),
so the estimator keeps finite variance while spending most samples where
the derivative actually lives. Noise rates are evaluated on the in-plane
points embedded back into R^d; for point-dependent strategies this
checks an (equally admissible) in-plane adversary rather than the
ambient one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import CertifiedProfile, MarginalSampler, PlaneDensity, plane_density
from .errors import UnderpoweredCheckError
from .geometry import BoundedProfile, require_unit, sign_of
from .noise import NoiseStrategy, noise_rates
from .rng import STREAM_VERIFY, make_rng
from .surrogate import SurrogateSpec, surrogate_derivative

LEMMA_KINDS = ("ramp", "sigmoid", "strong")

# stderr must reach this fraction of the floor before the verdict counts.
STDERR_FLOOR_FRACTION = 0.1
MC_SAMPLE_CAP = 10_000_000

# Samples are drawn in equal-size chunks whose means are the actual i.i.d.
# observations (the conditional coordinate is stratified inside a chunk,
# so per-sample values are correlated by design). The stderr over chunk
# means is only trusted once this many chunks exist.
_CHUNK = 1 << 14
_MIN_CHUNKS = 16


def lemma_sigma_cap(kind: str, profile: BoundedProfile, noise_param: float, theta: float) -> float:
    """Largest smoothing width for which the gradient floor is guaranteed.

    noise_param is the noise ceiling eta for the ramp and sigmoid bounds
    and the margin slope c for the strong bound. theta is the window edge
    the floor should cover, in (0, pi/2].
    """
    if kind not in LEMMA_KINDS:
        raise ValueError(f"unknown lemma kind {kind!r}, expected one of {LEMMA_KINDS}")
    if not (0.0 < theta <= math.pi / 2.0 + 1e-12):
        raise ValueError(f"theta must lie in (0, pi/2], got {theta!r}")
    U, R = profile.density_bound, profile.inner_radius
    s = math.sin(theta)
    if kind == "ramp":
        _check_eta(noise_param)
        return (R / (2.0 * U)) * math.sqrt(1.0 - 2.0 * noise_param) * s
    if kind == "sigmoid":
        _check_eta(noise_param)
        return (R / (8.0 * U)) * math.sqrt(1.0 - 2.0 * noise_param) * s
    _check_c(noise_param)
    return (R / (24.0 * U)) * math.sqrt(noise_param * R) * s


def lemma_gradient_floor(kind: str, profile: BoundedProfile, noise_param: float) -> float:
    """Guaranteed norm of the population surrogate gradient off the target."""
    if kind not in LEMMA_KINDS:
        raise ValueError(f"unknown lemma kind {kind!r}, expected one of {LEMMA_KINDS}")
    U, R = profile.density_bound, profile.inner_radius
    if kind == "ramp":
        _check_eta(noise_param)
        return R * R * (1.0 - 2.0 * noise_param) / (8.0 * U)
    if kind == "sigmoid":
        _check_eta(noise_param)
        return R * R * (1.0 - 2.0 * noise_param) / (32.0 * U)
    _check_c(noise_param)
    return noise_param * R**3 / (288.0 * U)


def _check_eta(eta: float) -> None:
    if not (0.0 <= eta < 0.5):
        raise ValueError(f"noise ceiling must lie in [0, 1/2), got {eta!r}")


def _check_c(c: float) -> None:
    if c <= 0.0:
        raise ValueError(f"margin slope must be positive, got {c!r}")


def good_bad_decomposition(x2d: np.ndarray, target2d: np.ndarray) -> str:
    """Region label for a point in the 2-d proof frame where w sits at e2.

    The good region G collects points whose first coordinate agrees in
    sign with the target label; those points pull the gradient the right
    way. The boundary goes to the complement by the strict inequality.
    """
    x2d = np.asarray(x2d, dtype=np.float64)
    target2d = np.asarray(target2d, dtype=np.float64)
    if x2d.shape != (2,) or target2d.shape != (2,):
        raise ValueError("good_bad_decomposition expects single 2-d points")
    g = x2d[0] * sign_of(float(target2d @ x2d))
    return "G" if g > 0.0 else "Gc"


@dataclass(frozen=True)
class StructuralCheckConfig:
    """One structural-floor verification job.

    angles live in [0, pi); a zero angle requests the complementary
    near-stationarity check at the target itself instead of a floor
    test. sigma must respect the relevant cap at the tightest window
    edge min(theta, pi - theta) over the positive angles.
    """

    surrogate: SurrogateSpec
    noise: NoiseStrategy
    marginal: MarginalSampler
    certified: CertifiedProfile
    angles: tuple[float, ...]
    mc_samples: int = 1 << 15
    confidence_sigmas: float = 3.0
    seed: int = 0
    mixture_weight: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if not self.angles:
            raise ValueError("angles must be non-empty")
        for a in self.angles:
            if not (0.0 <= a < math.pi):
                raise ValueError(f"every angle must lie in [0, pi), got {a!r}")
        if self.mc_samples < 2:
            raise ValueError(f"mc_samples must be at least 2, got {self.mc_samples!r}")
        if self.confidence_sigmas <= 0.0:
            raise ValueError(f"confidence_sigmas must be positive, got {self.confidence_sigmas!r}")
        if not (0.0 < self.mixture_weight < 1.0):
            raise ValueError(f"mixture_weight must lie in (0, 1), got {self.mixture_weight!r}")
        if self.noise.kind == "strong_massart_max" and self.surrogate.kind != "sigmoid":
            raise ValueError("the strong-noise floor is only stated for the sigmoid surrogate")
        edge = self.window_edge()
        if edge is not None:
            cap = lemma_sigma_cap(self.lemma_kind, self.certified.profile, self.noise_param, edge)
            if self.surrogate.sigma > cap * (1.0 + 1e-12):
                raise ValueError(
                    f"sigma {self.surrogate.sigma} exceeds the {self.lemma_kind} cap "
                    f"{cap} at window edge {edge}"
                )

    @property
    def lemma_kind(self) -> str:
        if self.noise.kind == "strong_massart_max":
            return "strong"
        return self.surrogate.kind

    @property
    def noise_param(self) -> float:
        if self.noise.kind == "strong_massart_max":
            return self.noise.c_strong
        return self.noise.eta_bound

    def window_edge(self) -> float | None:
        """Tightest positive window edge among the angles, None if all zero."""
        edges = [min(a, math.pi - a) for a in self.angles if a > 0.0]
        return min(edges) if edges else None


@dataclass(frozen=True)
class AngleGapResult:
    theta: float
    sigma: float
    floor: float
    estimate: float   # lower-bound estimate of the population gradient norm
    stderr: float
    samples: int
    verdict: str      # "pass" or "fail"
    good_mass: float  # gradient mass pulled by the good region
    bad_mass: float   # mass pushed back by its complement

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass(frozen=True)
class StructuralReport:
    lemma_kind: str
    noise_kind: str
    floor: float
    results: tuple[AngleGapResult, ...] = field(default_factory=tuple)

    def all_pass(self) -> bool:
        return all(r.passed for r in self.results)


def _laplace_pdf(t: np.ndarray, scale: float) -> np.ndarray:
    return np.exp(-np.abs(t) / scale) / (2.0 * scale)


class _GapAccumulator:
    """First and second moments of the three masses over chunk means."""

    __slots__ = ("chunks", "n", "sums", "sqs")

    def __init__(self):
        self.chunks = 0
        self.n = 0
        self.sums = np.zeros(3)
        self.sqs = np.zeros(3)

    def add_chunk(self, contrib: np.ndarray, good: np.ndarray, bad: np.ndarray) -> None:
        self.chunks += 1
        self.n += contrib.shape[0]
        for i, arr in enumerate((contrib, good, bad)):
            m = float(arr.mean())
            self.sums[i] += m
            self.sqs[i] += m * m

    def mean_stderr(self, i: int) -> tuple[float, float]:
        k = self.chunks
        mean = self.sums[i] / k
        var = max(self.sqs[i] - k * mean * mean, 0.0) / (k - 1)
        return mean, math.sqrt(var / k)


def _estimate_angle(
    config: StructuralCheckConfig,
    target: np.ndarray,
    theta: float,
    plane: PlaneDensity,
    floor: float,
    rng: np.random.Generator,
) -> AngleGapResult:
    dim = config.marginal.dim
    sigma = config.surrogate.sigma
    mix = config.mixture_weight
    # The derivative weight dies off within a few sigma of the margin, so
    # the proposal spends most of its draws on a Laplace band slightly
    # wider than that; the marginal mixture component keeps importance
    # weights bounded by 1/(1 - mix) everywhere else.
    lap_scale = 1.5 * sigma

    # Random plane through the target: w sits at angle theta inside it and
    # b1 completes the frame with <target, b1> = sin(theta).
    z = rng.standard_normal(dim)
    z -= (z @ target) * target
    norm = math.sqrt(float(z @ z))
    while norm < 1e-12:  # essentially impossible, but cheap to guard
        z = rng.standard_normal(dim)
        z -= (z @ target) * target
        norm = math.sqrt(float(z @ z))
    span = z / norm
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    w_hat = cos_t * target + sin_t * span
    b1 = sin_t * target - cos_t * span

    acc = _GapAccumulator()
    target_stderr = floor * STDERR_FLOOR_FRACTION

    def draw_chunk() -> None:
        b = _CHUNK
        from_band = rng.random(b) < mix
        k = int(from_band.sum())
        m = np.empty(b)
        m[from_band] = rng.laplace(0.0, lap_scale, k)
        m[~from_band] = plane.sample_marginal(b - k, rng)
        marg = plane.marginal_pdf(m)
        proposal = mix * _laplace_pdf(m, lap_scale) + (1.0 - mix) * marg
        weight = marg / proposal
        # Stratified conditional coordinate: one uniform per equal-mass
        # stratum, shuffled against the m draws, pushed through the
        # conditional quantile function.
        v = (rng.permutation(b) + rng.random(b)) / b
        np.clip(v, 1e-12, 1.0 - 1e-12, out=v)
        u = np.where(marg > 0.0, plane.conditional_inverse_cdf(m, v), 0.0)
        target_margin = cos_t * m + sin_t * u
        s = sign_of(target_margin)
        xs = m[:, None] * w_hat + u[:, None] * b1
        rates = noise_rates(config.noise, target, xs)
        f = -(1.0 - 2.0 * rates) * s * surrogate_derivative(config.surrogate, m) * u
        contrib = f * weight
        in_good = (u * s) > 0.0
        good = np.where(in_good, -contrib, 0.0)
        bad = np.where(in_good, 0.0, contrib)
        acc.add_chunk(contrib, good, bad)

    start_chunks = max(2, math.ceil(config.mc_samples / _CHUNK))
    for _ in range(start_chunks):
        draw_chunk()
    while True:
        mean, stderr = acc.mean_stderr(0)
        if acc.chunks >= _MIN_CHUNKS and stderr <= target_stderr:
            break
        if acc.n + _CHUNK > MC_SAMPLE_CAP:
            raise UnderpoweredCheckError(
                f"gradient-norm stderr {stderr:.3g} still above target "
                f"{target_stderr:.3g} after {acc.n} samples at theta={theta:.6g}"
            )
        add = min(acc.chunks, (MC_SAMPLE_CAP - acc.n) // _CHUNK)
        for _ in range(add):
            draw_chunk()

    estimate = abs(mean)
    if theta == 0.0:
        # The floor is vacuous at the target; check near-stationarity instead.
        verdict = "pass" if estimate <= config.confidence_sigmas * stderr else "fail"
    else:
        verdict = "pass" if estimate >= floor - config.confidence_sigmas * stderr else "fail"
    good_mass, _ = acc.mean_stderr(1)
    bad_mass, _ = acc.mean_stderr(2)
    return AngleGapResult(
        theta=theta,
        sigma=sigma,
        floor=floor,
        estimate=estimate,
        stderr=stderr,
        samples=acc.n,
        verdict=verdict,
        good_mass=good_mass,
        bad_mass=bad_mass,
    )


def verify_stationary_gap(config: StructuralCheckConfig, target: np.ndarray) -> StructuralReport:
    """Test the gradient-norm floor at every configured angle from target.

    Each angle gets its own RNG substream and its own uniformly random
    2-d plane through the target, so no coordinate axis is privileged.
    Sample sizes start at mc_samples and double until the stderr drops
    under a tenth of the floor; past ten million samples the check gives
    up and raises instead of returning an underpowered verdict.
    """
    target = require_unit(target, "target")
    if target.shape[0] != config.marginal.dim:
        raise ValueError(
            f"target dimension {target.shape[0]} does not match marginal dimension "
            f"{config.marginal.dim}"
        )
    plane = plane_density(config.marginal.kind, config.marginal.dim)
    floor = lemma_gradient_floor(config.lemma_kind, config.certified.profile, config.noise_param)
    results = []
    for i, theta in enumerate(config.angles):
        rng = make_rng(config.seed, STREAM_VERIFY, i)
        results.append(_estimate_angle(config, target, theta, plane, floor, rng))
    return StructuralReport(
        lemma_kind=config.lemma_kind,
        noise_kind=config.noise.kind,
        floor=floor,
        results=tuple(results),
    )
