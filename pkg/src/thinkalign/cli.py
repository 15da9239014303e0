"""Command-line entry points.

Subcommands: detect, score, advantages, forge, iterate, eval, serve.
Everything prints JSON to stdout and exits nonzero with a diagnostic on
stderr when a module raises.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from random import Random

from thinkalign import backends, evalharness, forge, grpo, langid, rewards
from thinkalign.config import load_pipeline_config
from thinkalign.pipeline import ToyTrainer, run_pipeline


def _print(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2))


def _cmd_detect(args) -> int:
    text = Path(args.infile).read_text(encoding="utf-8") if args.infile else args.text
    if text is None:
        print("detect: provide --text or --in", file=sys.stderr)
        return 2
    result = langid.detect_languages(text)
    _print(
        {
            "languages": {k: round(v, 4) for k, v in sorted(result.shares.items())},
            "total_linguistic_chars": result.total_linguistic_chars,
        }
    )
    return 0


def _cmd_score(args) -> int:
    response = Path(args.response_file).read_text(encoding="utf-8") if args.response_file else args.response
    if response is None:
        print("score: provide --response or --response-file", file=sys.stderr)
        return 2
    judge = None
    if not args.no_judge and args.mock:
        judge = backends.MockJudgeBackend(backends.MockScript.from_file(args.mock).judge or "<score>1.0</score>")
    breakdown = rewards.score_rollout(
        response,
        args.lang,
        args.gold,
        en_reference_think=args.en_think,
        judge=judge,
        question=args.question or "",
    )
    _print(breakdown.to_dict())
    return 0


def _cmd_advantages(args) -> int:
    values = [float(x) for x in args.rewards.split(",")]
    adv = grpo.group_advantages(values, grpo.GrpoConfig(std_floor=args.std_floor))
    _print({"rewards": values, "advantages": [round(float(a), 6) for a in adv]})
    return 0


def _cmd_forge(args) -> int:
    pairs = forge.read_question_pairs(args.questions)
    generation = backends.MockGenerationBackend(backends.MockScript.from_file(args.mock))
    cfg = forge.ForgeConfig(candidates_n=args.n, per_language_cap=args.cap)
    entries, report = forge.forge_dataset(pairs, generation, cfg, Random(args.seed))
    forge.write_dataset(entries, args.out)
    if args.report:
        Path(args.report).write_text(
            json.dumps({"seed": args.seed, **report.to_dict()}, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    _print(report.to_dict())
    return 0


def _cmd_iterate(args) -> int:
    config = load_pipeline_config(args.config)
    if args.seed is not None:
        # CLI seed overrides the config for quick reruns
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    if args.mock:
        generation = backends.MockGenerationBackend(backends.MockScript.from_file(args.mock))
    else:
        generation = backends.HttpGenerationClient(config.generation)
    trainer = ToyTrainer(seed=config.seed)
    state = run_pipeline(config, generation, trainer)
    _print(
        {
            "iterations": state.iteration,
            "model_tag": state.model_tag,
            "dataset": state.dataset_path,
            "report": state.report_path,
        }
    )
    return 0


def _cmd_eval(args) -> int:
    records = evalharness.eval_files(args.infiles)
    report = evalharness.macro_metrics(records, runs=len(args.infiles))
    evalharness.write_report(report, args.out)
    if args.items_out:
        evalharness.write_records(records, args.items_out)
    _print(report.to_dict())
    return 0


def _cmd_serve(args) -> int:
    from thinkalign.service import serve_scores

    judge = None
    if args.mock:
        script = backends.MockScript.from_file(args.mock)
        judge = backends.MockJudgeBackend(script.judge or "<score>1.0</score>")
    elif args.config and not args.no_judge:
        from thinkalign.service import judge_from_config

        judge = judge_from_config(load_pipeline_config(args.config).judge)
    serve_scores(host=args.host, port=args.port, judge=judge)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thinkalign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect the languages of a text")
    p.add_argument("--text")
    p.add_argument("--in", dest="infile")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("score", help="score one rollout")
    p.add_argument("--lang", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--response")
    p.add_argument("--response-file")
    p.add_argument("--question", help="English question text for the judge prompt")
    p.add_argument("--en-think", help="English reference thinking sequence")
    p.add_argument("--mock", help="mock script file providing judge replies")
    p.add_argument("--no-judge", action="store_true", help="skip the judge even if configured")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("advantages", help="group-normalize a reward list")
    p.add_argument("--rewards", required=True, help="comma-separated rewards, e.g. 1,0,0,1")
    p.add_argument("--std-floor", type=float, default=1e-6)
    p.set_defaults(func=_cmd_advantages)

    p = sub.add_parser("forge", help="rejection-sample an RL dataset")
    p.add_argument("--questions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--mock", required=True, help="mock script file/dir with scripted candidates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=8, help="candidates per side")
    p.add_argument("--cap", type=int, default=3000, help="per-language entry cap")
    p.set_defaults(func=_cmd_forge)

    p = sub.add_parser("iterate", help="run the full iteration loop")
    p.add_argument("--config", required=True, help="pipeline TOML")
    p.add_argument("--mock", help="mock script file/dir for generation")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=_cmd_iterate)

    p = sub.add_parser("eval", help="evaluate response records")
    p.add_argument("--in", dest="infiles", action="append", required=True, help="records JSONL, one per run")
    p.add_argument("--out", required=True)
    p.add_argument("--items-out", help="optional per-item audit JSONL")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the scoring service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--config", help="pipeline TOML supplying the judge backend")
    p.add_argument("--mock", help="mock script file providing judge replies")
    p.add_argument("--no-judge", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # one diagnostic line, nonzero exit
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
