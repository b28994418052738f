"""Group-relative advantages and the clipped, KL-regularised GRPO objective.

Everything here works on caller-supplied per-token log-probabilities; no
policy model is involved. Averaging is per token within a sequence, then
over the sequences of a group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

STD_FLOOR = 1e-8


class GrpoError(ValueError):
    pass


@dataclass(frozen=True)
class GrpoConfig:
    epsilon: float = 0.2
    beta: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise GrpoError("epsilon must lie in (0, 1)")
        if self.beta < 0:
            raise GrpoError("beta must be non-negative")


def _vector(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise GrpoError(f"{what} must be a flat list of numbers")
    if not np.all(np.isfinite(arr)):
        raise GrpoError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True)
class RolloutGroup:
    """G rollouts: rewards plus aligned token log-probs under three policies."""

    rewards: np.ndarray
    logp_theta: tuple[np.ndarray, ...]
    logp_old: tuple[np.ndarray, ...]
    logp_ref: tuple[np.ndarray, ...]

    @classmethod
    def build(
        cls,
        rewards: Sequence[float],
        logp_theta: Sequence[Sequence[float]],
        logp_old: Sequence[Sequence[float]],
        logp_ref: Sequence[Sequence[float]],
    ) -> "RolloutGroup":
        r = _vector(rewards, "rewards")
        g = len(r)
        if g < 2:
            raise GrpoError("a group needs at least two rollouts")
        if not len(logp_theta) == len(logp_old) == len(logp_ref) == g:
            raise GrpoError(f"expected {g} log-prob sequences per policy")
        th, old, ref = [], [], []
        for i in range(g):
            a = _vector(logp_theta[i], f"logp_theta[{i}]")
            b = _vector(logp_old[i], f"logp_old[{i}]")
            c = _vector(logp_ref[i], f"logp_ref[{i}]")
            if not len(a) == len(b) == len(c):
                raise GrpoError(f"sequence {i}: log-prob lengths differ ({len(a)}, {len(b)}, {len(c)})")
            if len(a) == 0:
                raise GrpoError(f"sequence {i} is empty")
            th.append(a)
            old.append(b)
            ref.append(c)
        return cls(r, tuple(th), tuple(old), tuple(ref))

    @property
    def size(self) -> int:
        return len(self.rewards)


def advantages(rewards: Sequence[float]) -> np.ndarray:
    """``(R - mean) / std`` with population std; all zeros if std < 1e-8."""
    r = _vector(rewards, "rewards")
    if len(r) < 2:
        raise GrpoError("a group needs at least two rewards")
    std = r.std()
    if std < STD_FLOOR:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def kl_estimate(logp_theta, logp_ref):
    """Per-token ``exp(d) - d - 1`` with ``d = logp_ref - logp_theta``."""
    d = np.asarray(logp_ref, dtype=float) - np.asarray(logp_theta, dtype=float)
    out = np.expm1(d) - d
    return float(out) if out.ndim == 0 else out


def clipped_term(ratio, adv: float, epsilon: float):
    ratio = np.asarray(ratio, dtype=float)
    return np.minimum(ratio * adv, np.clip(ratio, 1 - epsilon, 1 + epsilon) * adv)


def _check_adv(group: RolloutGroup, adv) -> np.ndarray:
    adv = advantages(group.rewards) if adv is None else _vector(adv, "advantages")
    if len(adv) != group.size:
        raise GrpoError(f"expected {group.size} advantages, got {len(adv)}")
    return adv


def token_objectives(group: RolloutGroup, adv=None, cfg: GrpoConfig = GrpoConfig()) -> list[np.ndarray]:
    adv = _check_adv(group, adv)
    out = []
    for a, th, old, ref in zip(adv, group.logp_theta, group.logp_old, group.logp_ref):
        ratio = np.exp(th - old)
        out.append(clipped_term(ratio, a, cfg.epsilon) - cfg.beta * kl_estimate(th, ref))
    return out


def surrogate_objective(group: RolloutGroup, adv=None, cfg: GrpoConfig = GrpoConfig()) -> float:
    """Mean over sequences of the per-token mean of (clip term - beta * KL)."""
    return float(np.mean([t.mean() for t in token_objectives(group, adv, cfg)]))


def objective_gradient(group: RolloutGroup, adv=None, cfg: GrpoConfig = GrpoConfig()) -> list[np.ndarray]:
    """d objective / d logp_theta, token by token.

    Where the clipped branch is active the ratio term is constant; at ties
    the unclipped branch is used.
    """
    adv = _check_adv(group, adv)
    grads = []
    g = group.size
    for a, th, old, ref in zip(adv, group.logp_theta, group.logp_old, group.logp_ref):
        ratio = np.exp(th - old)
        clipped = np.clip(ratio, 1 - cfg.epsilon, 1 + cfg.epsilon)
        d_ratio = np.where(ratio * a <= clipped * a, ratio * a, 0.0)
        d_kl = cfg.beta * np.expm1(ref - th)
        grads.append((d_ratio + d_kl) / (len(th) * g))
    return grads
