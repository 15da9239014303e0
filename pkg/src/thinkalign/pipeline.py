"""The iterative loop: rejection-sample a dataset against the current
reference model, hand it to a trainer, advance the model tag, repeat.

Real weight updates happen in an external trainer behind the Trainer
protocol; the in-repo ToyTrainer runs the exact GRPO math over a tiny
synthetic vocabulary so the loop stays honest end to end.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Dict, List, Optional, Protocol, Sequence

import numpy as np

from thinkalign.backends import GenerationBackend
from thinkalign.config import PipelineConfig, config_hash
from thinkalign.forge import RlDatasetEntry, forge_dataset, read_question_pairs, write_dataset
from thinkalign.grpo import GrpoConfig, RolloutGroup, ToyPolicy, toy_objective, toy_train_step
from thinkalign.langid import LanguageDetector

log = logging.getLogger(__name__)


class ForgeEmptyError(RuntimeError):
    """Rejection sampling kept nothing; there is no dataset to train on."""


class TrainerFailure(RuntimeError):
    """The trainer handle reported a failure."""


@dataclass
class IterationState:
    """Where the loop stands: which iteration finished and which model
    tag serves as the next reference."""

    iteration: int = 0
    model_tag: str = "base"
    dataset_path: Optional[str] = None
    report_path: Optional[str] = None


class Trainer(Protocol):
    def train(self, entries: Sequence[RlDatasetEntry], state: IterationState, config: PipelineConfig) -> str:
        """Consume a dataset, return the tag of the updated model."""
        ...


# Rewards attainable by the overall scalar; the toy vocabulary assigns one
# canned output per value so training has something to prefer.
_TOY_VOCAB_REWARDS = (2.0, 1.0, 0.0, -1.0)


@dataclass
class ToyTrainer:
    """Categorical-policy trainer over a synthetic per-language vocabulary.

    One toy question per language present in the dataset; each step
    samples a fresh group from the current policy (old = ref = current),
    computes advantages, and takes one exact-gradient ascent step. The
    logged objective is evaluated after the step against that step's
    snapshot, so ascent shows up as positive values.
    """

    steps: int = 50
    lr: float = 0.5
    seed: int = 0
    history: List[dict] = field(default_factory=list)

    def train(self, entries: Sequence[RlDatasetEntry], state: IterationState, config: PipelineConfig) -> str:
        if not entries:
            raise TrainerFailure("empty dataset")
        rng = Random(self.seed + state.iteration)
        grpo_cfg = config.grpo
        langs = sorted({e.lang for e in entries})
        policy = ToyPolicy(logits={lang: np.zeros(len(_TOY_VOCAB_REWARDS)) for lang in langs})
        self.history = []
        for step in range(self.steps):
            groups = []
            for lang in langs:
                ids = policy.sample(lang, grpo_cfg.group_size, rng)
                logprobs = policy.logprobs(lang)
                sampled_lp = [float(logprobs[i]) for i in ids]
                group = RolloutGroup(
                    rewards=[_TOY_VOCAB_REWARDS[i] for i in ids],
                    old_logprobs=sampled_lp,
                    new_logprobs=sampled_lp,
                    ref_logprobs=sampled_lp,
                    question_id=lang,
                    output_ids=ids,
                ).with_advantages(grpo_cfg)
                groups.append(group)
            policy = toy_train_step(policy, groups, grpo_cfg, self.lr)
            objective = toy_objective(policy, groups, grpo_cfg)
            expected = float(
                np.mean([policy.probs(lang) @ np.asarray(_TOY_VOCAB_REWARDS) for lang in langs])
            )
            self.history.append({"step": step, "objective": objective, "expected_reward": expected})
        log.info(
            "toy trainer: expected reward %.4f -> %.4f over %d steps",
            self.history[0]["expected_reward"],
            self.history[-1]["expected_reward"],
            self.steps,
        )
        return f"{state.model_tag}+it{state.iteration + 1}"


def run_iteration(
    state: IterationState,
    config: PipelineConfig,
    generation: GenerationBackend,
    trainer: Trainer,
    rng: Random,
    detector: Optional[LanguageDetector] = None,
    en_cache: Optional[Dict[str, List[str]]] = None,
) -> IterationState:
    """One full iteration: forge the dataset, train, advance the state.

    Raises:
        ForgeEmptyError: rejection sampling kept no questions.
        TrainerFailure: the trainer raised.
    """
    i = state.iteration + 1
    pairs = read_question_pairs(config.paths.questions)
    entries, report = forge_dataset(pairs, generation, config.forge, rng, detector, en_cache)
    if not entries:
        raise ForgeEmptyError(f"iteration {i}: no questions survived rejection sampling")

    out_dir = Path(config.paths.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_path = out_dir / f"dataset_iter{i}.jsonl"
    write_dataset(entries, dataset_path)

    try:
        new_tag = trainer.train(entries, state, config)
    except Exception as exc:
        raise TrainerFailure(f"iteration {i}: trainer failed: {exc}") from exc

    report_path = out_dir / f"forge_report_iter{i}.json"
    document = {
        "iteration": i,
        "reference_model": state.model_tag,
        "trained_model": new_tag,
        "seed": config.seed,
        "config_hash": config_hash(config),
        "dataset": dataset_path.name,
        "forge": report.to_dict(),
        "training": getattr(trainer, "history", None),
    }
    report_path.write_text(json.dumps(document, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return IterationState(
        iteration=i,
        model_tag=new_tag,
        dataset_path=str(dataset_path),
        report_path=str(report_path),
    )


def run_pipeline(
    config: PipelineConfig,
    generation: GenerationBackend,
    trainer: Trainer,
    detector: Optional[LanguageDetector] = None,
) -> IterationState:
    """Run the configured number of iterations from a fresh state.

    A single seeded rng drives every stochastic choice, so scripted
    backends make the whole run byte-deterministic.
    """
    rng = Random(config.seed)
    state = IterationState()
    en_cache: Optional[Dict[str, List[str]]] = {} if config.forge.cache_english_candidates else None
    for _ in range(config.iterations):
        state = run_iteration(state, config, generation, trainer, rng, detector, en_cache)
        log.info("iteration %d complete: %s", state.iteration, state.dataset_path)
    return state
