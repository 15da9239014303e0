"""Evaluation: per-item LC/Acc scoring and macro-averaged reporting.

Per language, each benchmark subset contributes its mean with equal
weight (macro, not micro), then per-run macro reports are averaged
arithmetically over runs. Difficulty-weighted accuracy combines the four
level accuracies with weights 1, 2, 4, 8 over 15.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from thinkalign.langid import LanguageDetector
from thinkalign.mathverify import accuracy_reward
from thinkalign.parsing import FormatError, parse_response
from thinkalign.rewards import lc_reward


class EmptySubsetError(ValueError):
    """A language/run combination has no records to aggregate."""


class OutOfRangeError(ValueError):
    """A level accuracy fell outside [0, 1]."""


@dataclass(frozen=True)
class EvalRecord:
    """Booleans for one evaluated item. lc_and_acc is the conjunction by
    construction; malformed responses are false on all three."""

    id: str
    lang: str
    subset: str
    level: Optional[int]
    lc: bool
    acc: bool
    lc_and_acc: bool
    run: int = 0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "lang": self.lang,
            "subset": self.subset,
            "level": self.level,
            "lc": self.lc,
            "acc": self.acc,
            "lc_and_acc": self.lc_and_acc,
            "run": self.run,
        }


@dataclass
class MetricReport:
    """Macro-averaged percentages per language, plus level accuracies
    (fractions in [0,1]) and difficulty-weighted accuracy when all four
    levels are present."""

    runs: int
    per_language: Dict[str, Dict[str, float]] = field(default_factory=dict)
    level_accuracy: Dict[str, Dict[int, float]] = field(default_factory=dict)
    dw_acc: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "per_language": {k: dict(sorted(v.items())) for k, v in sorted(self.per_language.items())},
            "level_accuracy": {
                k: {str(level): acc for level, acc in sorted(v.items())}
                for k, v in sorted(self.level_accuracy.items())
            },
            "dw_acc": dict(sorted(self.dw_acc.items())),
        }


def eval_item(
    response_text: str,
    lang: str,
    gold: str,
    *,
    item_id: str = "",
    subset: str = "",
    level: Optional[int] = None,
    run: int = 0,
    detector: Optional[LanguageDetector] = None,
) -> EvalRecord:
    """Score one benchmark response into (lc, acc, lc_and_acc) booleans.

    Accuracy ignores the response language; language consistency requires
    both segments to be single-language in `lang`. A response that does
    not parse is false on all three (nothing to extract from).
    """
    try:
        parsed = parse_response(response_text)
    except FormatError:
        lc = acc = False
    else:
        lc = lc_reward(parsed, lang, detector) == 0
        acc = accuracy_reward(parsed, gold) == 1
    return EvalRecord(
        id=item_id,
        lang=lang,
        subset=subset,
        level=level,
        lc=lc,
        acc=acc,
        lc_and_acc=lc and acc,
        run=run,
    )


def _macro_for_run(records: Sequence[EvalRecord]) -> Dict[str, float]:
    by_subset: Dict[str, List[EvalRecord]] = defaultdict(list)
    for r in records:
        by_subset[r.subset].append(r)
    sums = {"lc": 0.0, "acc": 0.0, "lc_and_acc": 0.0}
    for subset_records in by_subset.values():
        n = len(subset_records)
        sums["lc"] += sum(r.lc for r in subset_records) / n
        sums["acc"] += sum(r.acc for r in subset_records) / n
        sums["lc_and_acc"] += sum(r.lc_and_acc for r in subset_records) / n
    k = len(by_subset)
    return {metric: value / k for metric, value in sums.items()}


def macro_metrics(records: Sequence[EvalRecord], runs: int = 1) -> MetricReport:
    """Aggregate eval records into a macro-averaged report.

    Per language and run: mean over subsets of the per-subset mean; then
    the arithmetic mean over the `runs` runs (indices 0..runs-1), reported
    as percentages. Level accuracies are per-level means (fractions),
    averaged over the runs where the level occurs.

    Raises:
        EmptySubsetError: no records at all, or some language lacks
            records for one of the declared runs.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not records:
        raise EmptySubsetError("no records to aggregate")
    by_lang: Dict[str, Dict[int, List[EvalRecord]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        if not 0 <= r.run < runs:
            raise ValueError(f"record run index {r.run} outside declared runs {runs}")
        by_lang[r.lang][r.run].append(r)

    report = MetricReport(runs=runs)
    for lang in sorted(by_lang):
        run_macros = []
        for run in range(runs):
            if run not in by_lang[lang]:
                raise EmptySubsetError(f"language {lang!r} has no records for run {run}")
            run_macros.append(_macro_for_run(by_lang[lang][run]))
        report.per_language[lang] = {
            metric: 100.0 * sum(m[metric] for m in run_macros) / runs
            for metric in ("lc", "acc", "lc_and_acc")
        }
        level_runs: Dict[int, List[float]] = defaultdict(list)
        for run in range(runs):
            leveled: Dict[int, List[EvalRecord]] = defaultdict(list)
            for r in by_lang[lang][run]:
                if r.level is not None:
                    leveled[r.level].append(r)
            for level, recs in leveled.items():
                level_runs[level].append(sum(r.acc for r in recs) / len(recs))
        if level_runs:
            report.level_accuracy[lang] = {
                level: sum(values) / len(values) for level, values in sorted(level_runs.items())
            }
            levels = report.level_accuracy[lang]
            if set(levels) >= {1, 2, 3, 4}:
                report.dw_acc[lang] = dw_acc(levels[1], levels[2], levels[3], levels[4])
    return report


def dw_acc(a1: float, a2: float, a3: float, a4: float) -> float:
    """Difficulty-weighted accuracy: (1*a1 + 2*a2 + 4*a3 + 8*a4) / 15.

    Raises:
        OutOfRangeError: any accuracy outside [0, 1].
    """
    for a in (a1, a2, a3, a4):
        if not 0.0 <= a <= 1.0:
            raise OutOfRangeError(f"level accuracy {a} outside [0, 1]")
    return (1.0 * a1 + 2.0 * a2 + 4.0 * a3 + 8.0 * a4) / 15.0


# ---------------------------------------------------------------------------
# file interface


def eval_files(
    in_paths: Sequence,
    detector: Optional[LanguageDetector] = None,
) -> List[EvalRecord]:
    """Evaluate record files; each input file is one run (run = position).

    Line schema: {id, lang, subset, level?, gold, response}.
    """
    records: List[EvalRecord] = []
    for run, path in enumerate(in_paths):
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                records.append(
                    eval_item(
                        rec["response"],
                        rec["lang"],
                        str(rec["gold"]),
                        item_id=str(rec["id"]),
                        subset=rec.get("subset", ""),
                        level=rec.get("level"),
                        run=run,
                        detector=detector,
                    )
                )
            except KeyError as exc:
                raise ValueError(f"{path}:{line_no}: missing field {exc}") from exc
    return records


def write_report(report: MetricReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_records(records: Sequence[EvalRecord], path) -> None:
    Path(path).write_text(
        "".join(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n" for r in records),
        encoding="utf-8",
    )
