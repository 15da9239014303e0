"""Pipeline configuration: one TOML file, env-var secrets, content hash
for provenance.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from thinkalign.backends import BackendConfig, RetryPolicy, SamplingParams, judge_backend_config
from thinkalign.forge import ForgeConfig
from thinkalign.grpo import GrpoConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class PathsConfig:
    questions: str = "questions.jsonl"
    out_dir: str = "out"


@dataclass(frozen=True)
class PipelineConfig:
    iterations: int = 2
    seed: int = 0
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    forge: ForgeConfig = field(default_factory=ForgeConfig)
    generation: BackendConfig = field(default_factory=BackendConfig)
    judge: BackendConfig = field(default_factory=judge_backend_config)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if Path(self.paths.questions).resolve() == Path(self.paths.out_dir).resolve():
            raise ValueError("questions path and output dir must differ")

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(config: PipelineConfig) -> str:
    """Stable content hash of the config (env var NAMES included, secret
    values never; they are not part of the config)."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _build_backend(table: dict, base: BackendConfig) -> BackendConfig:
    retry = RetryPolicy(**table.pop("retry", {})) if "retry" in table else base.retry
    sampling = SamplingParams(**table.pop("sampling", {})) if "sampling" in table else base.sampling
    merged = {**asdict(base), **table, "retry": retry, "sampling": sampling}
    return BackendConfig(**merged)


def load_pipeline_config(path) -> PipelineConfig:
    """Load a PipelineConfig from TOML.

    Recognized tables: [grpo], [forge], [paths], [generation],
    [generation.retry], [generation.sampling], [judge], [judge.retry],
    [judge.sampling]. Top-level keys: iterations, seed.
    """
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    kwargs: dict = {}
    if "iterations" in data:
        kwargs["iterations"] = data["iterations"]
    if "seed" in data:
        kwargs["seed"] = data["seed"]
    if "grpo" in data:
        kwargs["grpo"] = GrpoConfig(**data["grpo"])
    if "forge" in data:
        kwargs["forge"] = ForgeConfig(**data["forge"])
    if "paths" in data:
        kwargs["paths"] = PathsConfig(**data["paths"])
    if "generation" in data:
        kwargs["generation"] = _build_backend(dict(data["generation"]), BackendConfig())
    if "judge" in data:
        kwargs["judge"] = _build_backend(dict(data["judge"]), judge_backend_config())
    return PipelineConfig(**kwargs)
