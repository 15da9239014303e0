#!/usr/bin/env python3
"""Watch the toy GRPO trainer learn on a synthetic two-language dataset.

Builds a handful of dataset entries (the trainer only looks at their
languages), runs ToyTrainer, and prints the per-step objective and
expected reward. Useful as a smoke check that the exact-gradient math
actually climbs.
"""

import argparse
import json

from thinkalign.config import PipelineConfig
from thinkalign.forge import RlDatasetEntry
from thinkalign.pipeline import IterationState, ToyTrainer


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=50)
    parser.add_argument("--lr", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--langs", default="fr,ja", help="comma-separated language codes")
    args = parser.parse_args()

    entries = [
        RlDatasetEntry(
            id=f"{lang}-demo",
            lang=lang,
            question=f"demo question ({lang})",
            gold="1",
            en_reference_think="reason step by step",
            provenance={"n_correct_x": 1, "n_correct_en": 1, "n": 4},
        )
        for lang in args.langs.split(",")
    ]
    trainer = ToyTrainer(steps=args.steps, lr=args.lr, seed=args.seed)
    tag = trainer.train(entries, IterationState(), PipelineConfig(seed=args.seed))

    for row in trainer.history:
        print(json.dumps({k: round(v, 6) if isinstance(v, float) else v for k, v in row.items()}))
    first, last = trainer.history[0], trainer.history[-1]
    print(
        f"# {tag}: expected reward {first['expected_reward']:.4f} -> {last['expected_reward']:.4f} "
        f"over {args.steps} steps"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
