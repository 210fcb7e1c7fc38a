"""Sampling pseudo-state distributions.

Discrete pseudo-state distributions are sampled exactly by inverse CDF. For a
continuous-state stand-in, :func:`langevin_sample` runs the unadjusted Langevin
algorithm on a Gaussian-mixture energy confined to an interval, and
:func:`quadrature_density` provides the binned ground truth it is checked
against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .ebm import PseudoStateDist
from .errors import NonFiniteState, ValidationError
from .policies import logsumexp

FIXTURES = ("single_gaussian", "symmetric_pair", "asymmetric_mixture")


@dataclass(frozen=True)
class SurrogateEnergy:
    """``E(x) = -log sum_j w_j exp(-(x - c_j)^2 / (2 b^2))`` on ``[lo, hi]``."""

    centers: tuple[float, ...]
    weights: tuple[float, ...]
    bandwidth: float
    lo: float
    hi: float

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        weights = tuple(float(w) for w in self.weights)
        if not centers:
            raise ValidationError("energy needs at least one center")
        if len(weights) != len(centers):
            raise ValidationError(f"{len(weights)} weights for {len(centers)} centers")
        if any(w <= 0 for w in weights):
            raise ValidationError("mixture weights must be positive")
        if not self.bandwidth > 0:
            raise ValidationError("bandwidth must be positive")
        if not self.lo < self.hi:
            raise ValidationError(f"empty interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "weights", weights)

    def _log_terms(self, x: np.ndarray) -> np.ndarray:
        c = np.asarray(self.centers)
        z = (np.asarray(x, dtype=float)[..., None] - c) / self.bandwidth
        return np.log(self.weights) - 0.5 * z * z

    def __call__(self, x) -> np.ndarray:
        return -logsumexp(self._log_terms(x), axis=-1)

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        # components are few and chains many, so loop over components on 1-D arrays
        inv = 1.0 / self.bandwidth ** 2
        diffs = [x - c for c in self.centers]
        logs = [np.log(w) - 0.5 * inv * d * d for w, d in zip(self.weights, diffs)]
        top = logs[0].copy()
        for lj in logs[1:]:
            np.maximum(top, lj, out=top)
        num = np.zeros_like(x)
        den = np.zeros_like(x)
        for lj, d in zip(logs, diffs):
            r = np.exp(lj - top)
            num += r * d
            den += r
        return inv * num / den

    def to_json(self) -> dict:
        return {"centers": list(self.centers), "weights": list(self.weights),
                "bandwidth": self.bandwidth, "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_json(cls, obj: dict) -> "SurrogateEnergy":
        missing = [k for k in ("centers", "weights", "bandwidth", "lo", "hi") if k not in obj]
        if missing:
            raise ValidationError(f"energy: missing field(s) {', '.join(missing)}")
        return cls(obj["centers"], obj["weights"], float(obj["bandwidth"]),
                   float(obj["lo"]), float(obj["hi"]))


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    seed: int
    steps: int = 0
    step_size: float = 0.0

    def to_jsonl(self) -> str:
        return "".join(json.dumps(v) + "\n" for v in self.values.tolist())


def load_fixture(name: str) -> SurrogateEnergy:
    if name not in FIXTURES:
        raise ValidationError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    text = resources.files("edmlab").joinpath("fixtures").joinpath(f"{name}.json").read_text()
    return SurrogateEnergy.from_json(json.loads(text))


def sample_categorical(p: PseudoStateDist, n: int, seed: int) -> SampleBatch:
    if n < 1:
        raise ValidationError("n must be >= 1")
    cdf = np.cumsum(p.probs)
    cdf[-1] = 1.0
    u = np.random.default_rng(seed).random(n)
    idx = np.searchsorted(cdf, u, side="right")
    return SampleBatch(idx, seed)


def _reflect(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    width = hi - lo
    y = np.mod(x - lo, 2.0 * width)
    return lo + np.where(y > width, 2.0 * width - y, y)


def langevin_sample(e: SurrogateEnergy, n: int, steps: int = 2000, step_size: float = 0.01,
                    seed: int = 0) -> SampleBatch:
    """Run ``n`` independent unadjusted Langevin chains and return their final states.

    Chains start uniformly on ``[lo, hi]`` and follow
    ``x <- x - step_size * E'(x) + sqrt(2 * step_size) * xi``, reflected at the
    interval ends. All chains advance together from a single generator, so the
    output depends only on the arguments.
    """
    if n < 1 or steps < 1:
        raise ValidationError("n and steps must be >= 1")
    if not step_size > 0:
        raise ValidationError("step_size must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(e.lo, e.hi, size=n)
    noise_scale = np.sqrt(2.0 * step_size)
    for t in range(steps):
        with np.errstate(over="ignore", invalid="ignore"):
            x = x - step_size * e.grad(x) + noise_scale * rng.standard_normal(n)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"chain state became non-finite at step {t}; reduce step_size")
        x = _reflect(x, e.lo, e.hi)
    return SampleBatch(x, seed, steps, step_size)


def quadrature_density(e: SurrogateEnergy, bins: int, points: int = 20_000) -> np.ndarray:
    """Probability of each of ``bins`` equal-width bins under ``exp(-E)``.

    The density is integrated by the trapezoid rule on a grid of at least
    ``points`` nodes laid out so that every bin edge is a node.
    """
    if bins < 2:
        raise ValidationError("bins must be >= 2")
    per_bin = max(1, -(-max(points, 10_000) // bins))
    x = np.linspace(e.lo, e.hi, bins * per_bin + 1)
    energies = e(x)
    dens = np.exp(-(energies - energies.min()))
    dx = x[1] - x[0]
    seg = 0.5 * (dens[:-1] + dens[1:]) * dx
    mass = seg.reshape(bins, per_bin).sum(axis=1)
    return mass / mass.sum()


def histogram(values: np.ndarray, lo: float, hi: float, bins: int) -> np.ndarray:
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    return counts / counts.sum()


def langevin_tv(e: SurrogateEnergy, batch: SampleBatch, bins: int = 50) -> float:
    """Total variation between the batch histogram and the quadrature bin masses."""
    return float(0.5 * np.abs(histogram(batch.values, e.lo, e.hi, bins) - quadrature_density(e, bins)).sum())
