"""Generative model: i.i.d. scene, joint per-pixel corruption, transformation.

A scene R ~ prior^n feeds a memoryless kernel producing the pixel pair
(x_i, y_i); the observed second sequence is then transformed by a member
of the family drawn uniformly.  We fix the first sequence untransformed
and estimate only the relative transformation, which is what the pairwise
decoders resolve.

Randomness contract: the stream for trial t of seed s is
Generator(Philox(key=[s, t])), and each trial consumes, in order, one
uniform per pixel (inverse-CDF over the scene-and-pair joint, scene-major)
and one integer for the transformation index.  Results are therefore
independent of batching and of worker scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .info_measures import JointPMF, PROB_SUM_TOL
from .permutations import Permutation, TransformationFamily, apply_permutation

__all__ = [
    "SourcePrior",
    "JointDMC",
    "Instance",
    "Scenario",
    "bsc_pair",
    "induced_joint",
    "trial_rng",
    "sample_instance",
]


@dataclass(frozen=True)
class SourcePrior:
    """Distribution of a scene pixel on [r]."""

    probs: np.ndarray

    @classmethod
    def from_probs(cls, probs) -> "SourcePrior":
        v = np.asarray(probs, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("prior must be a nonempty vector")
        if np.any(v < 0) or abs(float(v.sum()) - 1.0) > PROB_SUM_TOL:
            raise ValueError("prior must be nonnegative and sum to 1")
        v.setflags(write=False)
        return cls(probs=v)

    @property
    def r(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class JointDMC:
    """Per-scene-symbol joint emission kernel W(x, y | r)."""

    r: int
    x_size: int
    y_size: int
    kernel: np.ndarray  # shape (r, x_size, y_size)

    @classmethod
    def from_kernel(cls, kernel) -> "JointDMC":
        k = np.asarray(kernel, dtype=np.float64)
        if k.ndim != 3:
            raise ValueError("kernel must have shape (r, x_size, y_size)")
        if np.any(k < 0):
            raise ValueError("kernel entries must be nonnegative")
        sums = k.reshape(k.shape[0], -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > PROB_SUM_TOL):
            raise ValueError("each per-symbol emission matrix must sum to 1")
        k.setflags(write=False)
        return cls(r=k.shape[0], x_size=k.shape[1], y_size=k.shape[2], kernel=k)


@dataclass(frozen=True)
class Instance:
    """One sampled observation pair with its ground-truth transformation."""

    xs: np.ndarray
    ys: np.ndarray
    true_pi: Permutation
    true_index: int
    n: int
    seed: int
    trial_index: int


@dataclass(frozen=True)
class Scenario:
    """Channel plus transformation family at a fixed length."""

    prior: SourcePrior
    dmc: JointDMC
    family: TransformationFamily
    n: int

    def __post_init__(self):
        if self.prior.r != self.dmc.r:
            raise ValueError("prior size does not match kernel input alphabet")
        if self.family.n != self.n:
            raise ValueError("family ground-set size does not match n")

    def joint(self) -> JointPMF:
        return induced_joint(self.prior, self.dmc)


def bsc_pair(delta: float) -> tuple[SourcePrior, JointDMC]:
    """Uniform binary scene observed cleanly as x and through a BSC(delta) as y."""
    if not (0.0 <= delta <= 1.0):
        raise ValueError("crossover probability must lie in [0, 1]")
    kernel = np.zeros((2, 2, 2))
    for r in range(2):
        kernel[r, r, r] = 1.0 - delta
        kernel[r, r, 1 - r] = delta
    return SourcePrior.from_probs([0.5, 0.5]), JointDMC.from_kernel(kernel)


def induced_joint(prior: SourcePrior, dmc: JointDMC) -> JointPMF:
    """Marginal pair distribution p(x, y) = sum_r prior(r) W(x, y | r)."""
    if prior.r != dmc.r:
        raise ValueError("prior size does not match kernel input alphabet")
    return JointPMF.from_probs(np.tensordot(prior.probs, dmc.kernel, axes=1))


def trial_rng(seed: int, trial_index: int) -> Generator:
    """Counter-based stream for one trial; independent of scheduling."""
    return Generator(Philox(key=[seed, trial_index]))


def _joint_cdf(prior: SourcePrior, dmc: JointDMC) -> np.ndarray:
    flat = (prior.probs[:, None, None] * dmc.kernel).ravel()
    cdf = np.cumsum(flat)
    cdf[-1] = 1.0
    return cdf


def sample_instance(
    prior: SourcePrior,
    dmc: JointDMC,
    family: TransformationFamily,
    n: int,
    seed: int,
    trial_index: int = 0,
) -> Instance:
    """Draw one instance; fully determined by (seed, trial_index)."""
    if family.n != n:
        raise ValueError("family ground-set size does not match n")
    rng = trial_rng(seed, trial_index)
    cdf = _joint_cdf(prior, dmc)
    xs, ys_clean, true_index = _draw_fields(rng, cdf, dmc, family.size, n)
    true_pi = family.members[true_index]
    ys = apply_permutation(true_pi, ys_clean)
    return Instance(
        xs=xs,
        ys=ys,
        true_pi=true_pi,
        true_index=true_index,
        n=n,
        seed=seed,
        trial_index=trial_index,
    )


def _draw_fields(rng, cdf, dmc, family_size, n):
    """The per-trial draw sequence shared by all sampling paths."""
    u = rng.random(n)
    cell = np.searchsorted(cdf, u, side="right")
    pair = cell % (dmc.x_size * dmc.y_size)
    xs = (pair // dmc.y_size).astype(np.int64)
    ys_clean = (pair % dmc.y_size).astype(np.int64)
    true_index = int(rng.integers(0, family_size))
    return xs, ys_clean, true_index
