import math
from dataclasses import replace
from random import Random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinkalign.grpo import (
    DEFAULT_CONFIG,
    AdvantagesUnsetError,
    GroupTooSmallError,
    GrpoConfig,
    NonFiniteError,
    RolloutGroup,
    ToyPolicy,
    group_advantages,
    grpo_objective,
    kl_estimate,
    toy_gradient,
    toy_objective,
    toy_train_step,
)


# --- advantages ---------------------------------------------------------------


def test_zero_variance_returns_exact_zeros():
    adv = group_advantages([1.0, 1.0, 1.0, 1.0])
    assert adv.tolist() == [0.0, 0.0, 0.0, 0.0]


def test_hand_oracle_balanced():
    adv = group_advantages([1.0, 0.0, 0.0, 1.0])
    assert np.allclose(adv, [1.0, -1.0, -1.0, 1.0], atol=1e-12)


def test_hand_oracle_single_spike():
    adv = group_advantages([2.0, 0.0, 0.0, 0.0])
    assert np.allclose(adv, [1.7321, -0.5774, -0.5774, -0.5774], atol=1e-4)


def test_group_too_small():
    with pytest.raises(GroupTooSmallError):
        group_advantages([1.0])
    with pytest.raises(GroupTooSmallError):
        group_advantages([])


def test_non_finite_rewards_rejected():
    with pytest.raises(NonFiniteError):
        group_advantages([1.0, float("nan"), 0.0])
    with pytest.raises(NonFiniteError):
        group_advantages([1.0, float("inf")])


def test_near_constant_group_hits_floor():
    # std below the floor means the zero rule, not a 1e6 blow-up
    adv = group_advantages([1.0, 1.0 + 1e-9, 1.0, 1.0])
    assert adv.tolist() == [0.0, 0.0, 0.0, 0.0]


@settings(max_examples=200)
@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=16),
    st.floats(0.1, 10.0),
    st.floats(-10.0, 10.0),
)
def test_standardization_and_affine_invariance(rewards, k, c):
    r = np.asarray(rewards)
    adv = group_advantages(rewards)
    if float(r.std()) < DEFAULT_CONFIG.std_floor:
        assert np.all(adv == 0.0)
    else:
        assert abs(adv.mean()) < 1e-9
        assert abs(adv.std() - 1.0) < 1e-6
        scaled = group_advantages([k * x + c for x in rewards])
        assert np.allclose(scaled, adv, atol=1e-6)


# --- KL estimator ---------------------------------------------------------------


def test_kl_zero_when_equal():
    assert kl_estimate(-1.3, -1.3) == 0.0


def test_kl_hand_oracles():
    # r = exp(ref - new) = 2 and 0.5
    assert kl_estimate(0.0, math.log(2.0)) == pytest.approx(2 - math.log(2) - 1, abs=1e-12)
    assert kl_estimate(0.0, math.log(2.0)) == pytest.approx(0.30685, abs=1e-5)
    assert kl_estimate(0.0, -math.log(2.0)) == pytest.approx(0.5 + math.log(2) - 1, abs=1e-12)
    assert kl_estimate(0.0, -math.log(2.0)) == pytest.approx(0.19315, abs=1e-5)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_kl_nonnegative(new, ref):
    kl = kl_estimate(new, ref)
    assert kl >= 0.0
    if new == ref:
        assert kl == 0.0
    elif abs(ref - new) > 1e-6:  # below this the quadratic term underflows
        assert kl > 0.0


def test_kl_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        kl_estimate(float("nan"), 0.0)
    with pytest.raises(NonFiniteError):
        kl_estimate(0.0, float("inf"))
    with pytest.raises(NonFiniteError):
        kl_estimate(-1000.0, 0.0)  # exp overflow


# --- rollout groups and the objective ---------------------------------------------


def _group(rewards, old, new, ref, advantages=None):
    g = RolloutGroup(rewards=rewards, old_logprobs=old, new_logprobs=new, ref_logprobs=ref)
    if advantages is not None:
        g = replace(g, advantages=np.asarray(advantages, dtype=np.float64))
    return g


def test_group_length_validation():
    with pytest.raises(ValueError):
        RolloutGroup(rewards=[1, 0], old_logprobs=[0.0], new_logprobs=[0.0, 0.0], ref_logprobs=[0.0, 0.0])


def test_with_advantages():
    g = _group([1.0, 0.0], [-1.0, -1.0], [-1.0, -1.0], [-1.0, -1.0]).with_advantages()
    assert np.allclose(g.advantages, [1.0, -1.0])
    assert len(g) == 2


def test_objective_requires_advantages():
    g = _group([1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(AdvantagesUnsetError):
        grpo_objective(g)


def test_objective_identity_policy_is_mean_advantage():
    adv = [0.7, -0.2, -0.5]
    lp = [-1.0, -2.0, -0.5]
    g = _group([0, 0, 0], lp, lp, lp, advantages=adv)
    cfg = GrpoConfig(kl_beta=0.0)
    assert grpo_objective(g, cfg) == pytest.approx(np.mean(adv), abs=1e-12)


def test_objective_clip_example():
    # single output, rho = 1.3, eps = 0.2, A = +1: the clipped branch wins
    g = _group([0.0], [0.0], [math.log(1.3)], [math.log(1.3)], advantages=[1.0])
    assert grpo_objective(g, GrpoConfig(clip_eps=0.2)) == pytest.approx(1.2, abs=1e-12)


def test_objective_negative_advantage_keeps_unclipped():
    # rho = 1.3, A = -1: min(-1.3, -1.2) = -1.3
    g = _group([0.0], [0.0], [math.log(1.3)], [math.log(1.3)], advantages=[-1.0])
    assert grpo_objective(g, GrpoConfig(clip_eps=0.2)) == pytest.approx(-1.3, abs=1e-12)


def test_objective_kl_term_zero_for_identical_ref():
    adv = [0.3, -0.3]
    lp = [-0.7, -0.7]
    g = _group([0, 0], lp, lp, lp, advantages=adv)
    assert grpo_objective(g, GrpoConfig(kl_beta=0.04)) == pytest.approx(np.mean(adv), abs=1e-12)


def test_objective_kl_penalty_exact():
    lp = [-1.0]
    new = [-0.4]
    g = _group([0.0], new, new, lp, advantages=[0.0])  # old = new so rho = 1
    beta = 0.25
    expected = -beta * kl_estimate(new[0], lp[0])
    assert grpo_objective(g, GrpoConfig(kl_beta=beta)) == pytest.approx(expected, abs=1e-12)


def test_objective_rejects_non_finite():
    g = _group([0.0], [0.0], [float("inf")], [0.0], advantages=[1.0])
    with pytest.raises(NonFiniteError):
        grpo_objective(g)
    g = _group([0.0], [0.0], [1000.0], [0.0], advantages=[1.0])
    with pytest.raises(NonFiniteError):
        grpo_objective(g)


@settings(max_examples=200)
@given(
    st.lists(st.tuples(st.floats(-2, 2), st.floats(-3, 3)), min_size=1, max_size=8),
    st.floats(0.05, 0.5),
)
def test_clipping_dominance(pairs, eps):
    # every per-output term is bounded by its unclipped value rho * A
    log_rhos = [p[0] for p in pairs]
    advs = [p[1] for p in pairs]
    zeros = [0.0] * len(pairs)
    g = _group(zeros, zeros, log_rhos, log_rhos, advantages=advs)
    value = grpo_objective(g, GrpoConfig(clip_eps=eps, kl_beta=0.0))
    unclipped = np.mean([math.exp(lr) * a for lr, a in zip(log_rhos, advs)])
    assert value <= unclipped + 1e-9


# --- toy policy ------------------------------------------------------------------


def test_probs_sum_to_one():
    policy = ToyPolicy(logits={"q": np.array([0.1, -2.0, 3.0])})
    assert policy.probs("q").sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.exp(policy.logprobs("q")), policy.probs("q"))


@given(st.lists(st.floats(-30, 30), min_size=2, max_size=6))
def test_probs_sum_to_one_random(logits):
    policy = ToyPolicy(logits={"q": np.array(logits)})
    assert policy.probs("q").sum() == pytest.approx(1.0, abs=1e-12)


def test_extreme_logits_stay_finite():
    policy = ToyPolicy(logits={"q": np.array([-1000.0, 1000.0])})
    p = policy.probs("q")
    assert np.all(np.isfinite(p)) and p.sum() == pytest.approx(1.0)
    assert np.all(np.isfinite(policy.logprobs("q")) | (policy.logprobs("q") == -np.inf))


def test_sample_deterministic_and_in_range():
    policy = ToyPolicy(logits={"q": np.array([0.0, 0.5, -0.5])})
    ids_a = policy.sample("q", 32, Random(7))
    ids_b = policy.sample("q", 32, Random(7))
    assert ids_a == ids_b
    assert all(0 <= i < 3 for i in ids_a)


def test_copy_is_deep():
    policy = ToyPolicy(logits={"q": np.zeros(2)})
    clone = policy.copy()
    clone.logits["q"][0] = 5.0
    assert policy.logits["q"][0] == 0.0


# --- toy objective / gradient -------------------------------------------------------


def _toy_setup(rng, n_questions=2, vocab=4, group_size=6, kink_margin=0.05, beta=0.0):
    """Random policy + groups whose rhos stay away from the clip kinks."""
    cfg = GrpoConfig(group_size=max(group_size, 2), clip_eps=0.2, kl_beta=beta)
    while True:
        policy = ToyPolicy(
            logits={f"q{k}": np.array([rng.uniform(-1, 1) for _ in range(vocab)]) for k in range(n_questions)}
        )
        groups = []
        ok = True
        for q in policy.logits:
            ids = [rng.randrange(vocab) for _ in range(group_size)]
            lp = policy.logprobs(q)
            new = np.array([lp[i] for i in ids])
            old = new - np.array([rng.uniform(-0.15, 0.15) for _ in ids])
            rho = np.exp(new - old)
            if np.any(np.abs(rho - (1 + cfg.clip_eps)) < kink_margin) or np.any(
                np.abs(rho - (1 - cfg.clip_eps)) < kink_margin
            ):
                ok = False
                break
            rewards = [rng.choice([2.0, 1.0, 0.0, -1.0]) for _ in ids]
            if np.std(rewards) < 1e-6:
                ok = False
                break
            ref = new + np.array([rng.uniform(-0.1, 0.1) for _ in ids])
            groups.append(
                RolloutGroup(
                    rewards=rewards,
                    old_logprobs=list(old),
                    new_logprobs=list(new),
                    ref_logprobs=list(ref),
                    question_id=q,
                    output_ids=ids,
                ).with_advantages(cfg)
            )
        if ok:
            return policy, groups, cfg


def _fd_gradient(policy, groups, cfg, h=1e-5):
    grads = {}
    for q in policy.logits:
        g = np.zeros_like(policy.logits[q])
        for u in range(len(g)):
            plus = policy.copy()
            plus.logits[q][u] += h
            minus = policy.copy()
            minus.logits[q][u] -= h
            g[u] = (toy_objective(plus, groups, cfg) - toy_objective(minus, groups, cfg)) / (2 * h)
        grads[q] = g
    return grads


def test_gradient_matches_finite_differences():
    rng = Random(42)
    for trial in range(30):
        beta = 0.0 if trial % 2 == 0 else 0.1
        policy, groups, cfg = _toy_setup(rng, beta=beta)
        analytic = toy_gradient(policy, groups, cfg)
        numeric = _fd_gradient(policy, groups, cfg)
        for q in analytic:
            scale = max(np.max(np.abs(numeric[q])), 1e-8)
            assert np.max(np.abs(analytic[q] - numeric[q])) / scale <= 1e-4, f"trial {trial} {q}"


def test_gradient_at_kink_lies_between_one_sided_differences():
    # construct an exact kink: rho = 1 + eps with positive advantage
    cfg = GrpoConfig(clip_eps=0.2, kl_beta=0.0)
    policy = ToyPolicy(logits={"q": np.array([0.3, -0.3])})
    lp = policy.logprobs("q")
    ids = [0, 1]
    new = np.array([lp[0], lp[1]])
    old = new - math.log(1 + cfg.clip_eps)  # rho exactly 1 + eps for both
    g = RolloutGroup(
        rewards=[1.0, 0.0],
        old_logprobs=list(old),
        new_logprobs=list(new),
        ref_logprobs=list(new),
        question_id="q",
        output_ids=ids,
    ).with_advantages(cfg)
    analytic = toy_gradient(policy, [g], cfg)["q"]
    h = 1e-6
    for u in range(2):
        plus = policy.copy()
        plus.logits["q"][u] += h
        minus = policy.copy()
        minus.logits["q"][u] -= h
        f0 = toy_objective(policy, [g], cfg)
        right = (toy_objective(plus, [g], cfg) - f0) / h
        left = (f0 - toy_objective(minus, [g], cfg)) / h
        lo, hi = min(left, right), max(left, right)
        assert lo - 1e-6 <= analytic[u] <= hi + 1e-6


def test_toy_objective_identity_equals_mean_advantage():
    rng = Random(3)
    policy, groups, cfg = _toy_setup(rng, beta=0.0)
    # re-anchor old at the current policy so rho = 1 everywhere
    anchored = []
    for g in groups:
        lp = policy.logprobs(g.question_id)
        sampled = [float(lp[i]) for i in g.output_ids]
        anchored.append(replace(g, old_logprobs=sampled, ref_logprobs=sampled))
    value = toy_objective(policy, anchored, cfg)
    expected = float(np.mean([np.mean(g.advantages) for g in anchored]))
    assert value == pytest.approx(expected, abs=1e-12)


def test_train_step_zero_lr_is_identity():
    rng = Random(5)
    policy, groups, cfg = _toy_setup(rng)
    stepped = toy_train_step(policy, groups, cfg, lr=0.0)
    for q in policy.logits:
        assert np.array_equal(stepped.logits[q], policy.logits[q])


def test_train_step_zero_advantages_is_identity():
    cfg = GrpoConfig(kl_beta=0.0)
    policy = ToyPolicy(logits={"q": np.array([0.2, -0.2])})
    lp = policy.logprobs("q")
    sampled = [float(lp[0]), float(lp[1])]
    g = RolloutGroup(
        rewards=[1.0, 1.0],  # zero variance -> zero advantages
        old_logprobs=sampled,
        new_logprobs=sampled,
        ref_logprobs=sampled,
        question_id="q",
        output_ids=[0, 1],
    ).with_advantages(cfg)
    assert np.all(g.advantages == 0.0)
    stepped = toy_train_step(policy, [g], cfg, lr=0.5)
    assert np.array_equal(stepped.logits["q"], policy.logits["q"])


def test_toy_groups_need_ids():
    g = _group([1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], advantages=[1.0, -1.0])
    with pytest.raises(ValueError):
        toy_objective(ToyPolicy(logits={"q": np.zeros(2)}), [g])


def test_two_output_ascent_is_strictly_monotone():
    # scripted environment: 4 candidates of each output per step
    cfg = GrpoConfig(group_size=8, clip_eps=0.2, kl_beta=0.0)
    policy = ToyPolicy(logits={"q": np.zeros(2)})
    rewards = [1.0] * 4 + [0.0] * 4
    ids = [0] * 4 + [1] * 4
    probs = [policy.probs("q")[0]]
    for _ in range(50):
        lp = policy.logprobs("q")
        sampled = [float(lp[i]) for i in ids]
        group = RolloutGroup(
            rewards=rewards,
            old_logprobs=sampled,
            new_logprobs=sampled,
            ref_logprobs=sampled,
            question_id="q",
            output_ids=ids,
        ).with_advantages(cfg)
        policy = toy_train_step(policy, [group], cfg, lr=0.1)
        probs.append(policy.probs("q")[0])
    assert all(b > a for a, b in zip(probs, probs[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        GrpoConfig(group_size=1)
    with pytest.raises(ValueError):
        GrpoConfig(clip_eps=0.0)
    with pytest.raises(ValueError):
        GrpoConfig(clip_eps=1.0)
    with pytest.raises(ValueError):
        GrpoConfig(kl_beta=-0.1)
    with pytest.raises(ValueError):
        GrpoConfig(std_floor=0.0)
