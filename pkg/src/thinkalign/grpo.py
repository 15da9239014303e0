"""Group-relative policy optimization math: advantages, the clipped
surrogate objective with a KL penalty, and a toy categorical policy with
exact analytic gradients for end-to-end checks.

Conventions fixed here and frozen by tests:
  - advantages standardize rewards by the population std with a 1e-6
    floor; zero-variance groups yield exactly zero advantages;
  - the KL estimator is r - log r - 1 with r = exp(ref - new), the
    nonnegative low-variance form;
  - objective = mean_i[ min(rho_i A_i, clip(rho_i) A_i) - beta * kl_i ].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence

import numpy as np


class GroupTooSmallError(ValueError):
    """Advantage normalization needs at least two rewards."""


class NonFiniteError(ValueError):
    """A non-finite value entered or left the objective math."""


class AdvantagesUnsetError(ValueError):
    """The objective was asked for before advantages were computed."""


@dataclass(frozen=True)
class GrpoConfig:
    """Hyperparameters of the group-relative objective."""

    group_size: int = 8
    clip_eps: float = 0.2
    kl_beta: float = 0.0
    std_floor: float = 1e-6

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must lie in (0, 1)")
        if self.kl_beta < 0.0:
            raise ValueError("kl_beta must be >= 0")
        if self.std_floor <= 0.0:
            raise ValueError("std_floor must be > 0")


DEFAULT_CONFIG = GrpoConfig()


def group_advantages(rewards: Sequence[float], config: GrpoConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Standardize a reward group: (r - mean) / max(population_std, floor).

    Zero-variance groups return exact zeros. Affine-invariant: any
    k*r + c (k > 0) maps to the same advantages up to float error.

    Raises:
        GroupTooSmallError: fewer than two rewards.
        NonFiniteError: non-finite rewards.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise GroupTooSmallError(f"need at least 2 rewards, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise NonFiniteError("rewards must be finite")
    std = float(r.std())
    if std < config.std_floor:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def kl_estimate(new_logprob: float, ref_logprob: float) -> float:
    """Per-token KL estimate r - log r - 1 with r = exp(ref - new).

    Nonnegative, zero iff the log-probs agree.

    Raises:
        NonFiniteError: non-finite inputs or overflowing exp.
    """
    if not (math.isfinite(new_logprob) and math.isfinite(ref_logprob)):
        raise NonFiniteError("log-probs must be finite")
    delta = ref_logprob - new_logprob
    try:
        return math.exp(delta) - delta - 1.0
    except OverflowError as exc:
        raise NonFiniteError("kl estimate overflowed") from exc


@dataclass
class RolloutGroup:
    """N candidate outputs for one question: rewards, log-probs under the
    sampling/current/reference policies, and (optionally) advantages.

    question_id/output_ids tie the group to a toy-policy vocabulary; they
    stay None for pure objective math.
    """

    rewards: Sequence[float]
    old_logprobs: Sequence[float]
    new_logprobs: Sequence[float]
    ref_logprobs: Sequence[float]
    advantages: Optional[np.ndarray] = None
    question_id: Optional[str] = None
    output_ids: Optional[Sequence[int]] = None

    def __post_init__(self) -> None:
        n = len(self.rewards)
        for name in ("old_logprobs", "new_logprobs", "ref_logprobs"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length != rewards length {n}")
        if self.advantages is not None and len(self.advantages) != n:
            raise ValueError("advantages length mismatch")
        if self.output_ids is not None and len(self.output_ids) != n:
            raise ValueError("output_ids length mismatch")

    def __len__(self) -> int:
        return len(self.rewards)

    def with_advantages(self, config: GrpoConfig = DEFAULT_CONFIG) -> "RolloutGroup":
        return replace(self, advantages=group_advantages(self.rewards, config))


def grpo_objective(group: RolloutGroup, config: GrpoConfig = DEFAULT_CONFIG) -> float:
    """The clipped surrogate objective with KL penalty for one group.

    (1/N) sum_i [ min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i)
                  - beta * kl_i ]
    with rho_i = exp(new_i - old_i) and kl_i per kl_estimate.

    Raises:
        AdvantagesUnsetError: advantages were never computed.
        NonFiniteError: anything non-finite in or out.
    """
    if group.advantages is None:
        raise AdvantagesUnsetError("compute advantages before the objective")
    old = np.asarray(group.old_logprobs, dtype=np.float64)
    new = np.asarray(group.new_logprobs, dtype=np.float64)
    ref = np.asarray(group.ref_logprobs, dtype=np.float64)
    adv = np.asarray(group.advantages, dtype=np.float64)
    if not all(np.all(np.isfinite(x)) for x in (old, new, ref, adv)):
        raise NonFiniteError("objective inputs must be finite")
    with np.errstate(over="raise"):
        try:
            rho = np.exp(new - old)
            clipped = np.clip(rho, 1.0 - config.clip_eps, 1.0 + config.clip_eps)
            surrogate = np.minimum(rho * adv, clipped * adv)
            r_ref = np.exp(ref - new)
        except FloatingPointError as exc:
            raise NonFiniteError("objective overflowed") from exc
    kl = r_ref - (ref - new) - 1.0
    value = float(np.mean(surrogate - config.kl_beta * kl))
    if not math.isfinite(value):
        raise NonFiniteError("objective is non-finite")
    return value


# ---------------------------------------------------------------------------
# toy categorical policy


@dataclass
class ToyPolicy:
    """Logit table over a tiny vocabulary of canned outputs per question.

    Gives exact log-probs, so the GRPO gradient can be checked against
    finite differences without any estimation noise.
    """

    logits: Dict[str, np.ndarray] = field(default_factory=dict)

    def probs(self, question_id: str) -> np.ndarray:
        z = np.asarray(self.logits[question_id], dtype=np.float64)
        e = np.exp(z - z.max())
        return e / e.sum()

    def logprobs(self, question_id: str) -> np.ndarray:
        z = np.asarray(self.logits[question_id], dtype=np.float64)
        m = z.max()
        return z - m - math.log(np.exp(z - m).sum())

    def sample(self, question_id: str, n: int, rng) -> list:
        """Draw n output ids with the stdlib rng (deterministic given seed)."""
        p = self.probs(question_id)
        cdf = np.cumsum(p)
        last = len(p) - 1  # cdf[-1] can undershoot 1.0 by an ulp
        ids = []
        for _ in range(n):
            u = rng.random()
            ids.append(min(int(np.searchsorted(cdf, u, side="right")), last))
        return ids

    def copy(self) -> "ToyPolicy":
        return ToyPolicy(logits={q: np.array(z, dtype=np.float64, copy=True) for q, z in self.logits.items()})


def _require_toy_groups(groups: Sequence[RolloutGroup]) -> None:
    if not groups:
        raise ValueError("no rollout groups")
    for g in groups:
        if g.question_id is None or g.output_ids is None:
            raise ValueError("toy training needs question_id and output_ids on every group")
        if g.advantages is None:
            raise AdvantagesUnsetError("compute advantages before training")


def toy_objective(policy: ToyPolicy, groups: Sequence[RolloutGroup], config: GrpoConfig = DEFAULT_CONFIG) -> float:
    """Batch objective with new_logprobs recomputed under `policy`.

    This is the function whose gradient toy_gradient returns; the stored
    new_logprobs on the groups are ignored.
    """
    _require_toy_groups(groups)
    total = 0.0
    for g in groups:
        lp = policy.logprobs(g.question_id)
        new = [float(lp[i]) for i in g.output_ids]
        total += grpo_objective(replace(g, new_logprobs=new), config)
    return total / len(groups)


def toy_gradient(
    policy: ToyPolicy, groups: Sequence[RolloutGroup], config: GrpoConfig = DEFAULT_CONFIG
) -> Dict[str, np.ndarray]:
    """Exact gradient of toy_objective w.r.t. each question's logits.

    Derivation: with rho_i = exp(new_i - old_i) and d new_i / d z_u =
    1[u = v_i] - p_u, the surrogate contributes (ds_i/drho_i) * rho_i and
    the KL penalty contributes beta * (exp(ref_i - new_i) - 1), both
    through the same (onehot - p) factor. At a clip kink the one-sided
    (inside-the-trust-region) derivative is used.
    """
    _require_toy_groups(groups)
    eps = config.clip_eps
    grads: Dict[str, np.ndarray] = {
        q: np.zeros_like(np.asarray(policy.logits[q], dtype=np.float64)) for q in policy.logits
    }
    for g in groups:
        p = policy.probs(g.question_id)
        lp = policy.logprobs(g.question_id)
        ids = np.asarray(g.output_ids, dtype=np.intp)
        new = lp[ids]
        old = np.asarray(g.old_logprobs, dtype=np.float64)
        ref = np.asarray(g.ref_logprobs, dtype=np.float64)
        adv = np.asarray(g.advantages, dtype=np.float64)
        rho = np.exp(new - old)
        # ds/drho: A for the unclipped branch, 0 once the min picks the clip
        active = np.where(adv >= 0.0, rho <= 1.0 + eps, rho >= 1.0 - eps)
        ds = adv * active
        coeff = ds * rho + config.kl_beta * (np.exp(ref - new) - 1.0)
        grad = np.zeros_like(p)
        np.add.at(grad, ids, coeff)
        grad -= p * coeff.sum()
        grads[g.question_id] += grad / len(g)
    for q in grads:
        grads[q] /= len(groups)
    return grads


def toy_train_step(
    policy: ToyPolicy,
    groups: Sequence[RolloutGroup],
    config: GrpoConfig = DEFAULT_CONFIG,
    lr: float = 0.1,
) -> ToyPolicy:
    """One exact-gradient ascent step on the batch objective.

    Returns a new policy; old/ref log-probs on the groups stay fixed, so
    repeated steps against the same groups move rho away from 1.
    """
    grads = toy_gradient(policy, groups, config)
    out = policy.copy()
    for q, grad in grads.items():
        out.logits[q] = out.logits[q] + lr * grad
    return out
