"""Reward, data-construction, GRPO, and evaluation tooling for
language-consistent multilingual reasoning RL.

The package is organized around a reward stack (format -> language
consistency -> answer accuracy -> cross-lingual thinking alignment),
rejection-sampling dataset construction, the group-relative policy
objective with a toy exact-gradient trainer, and a macro-averaged
evaluation harness. Generation and judge models are pluggable backends
(OpenAI-compatible HTTP or deterministic mocks).
"""

from thinkalign.langid import (
    LANGUAGES,
    DetectionResult,
    EmptyTextError,
    LanguageDetector,
    detect_languages,
    is_consistent,
    strip_non_linguistic,
)
from thinkalign.parsing import (
    FormatError,
    ParsedResponse,
    RawResponse,
    extract_boxed,
    format_reward,
    parse_response,
)
from thinkalign.mathverify import CanonicalAnswer, accuracy_reward, equivalent, normalize
from thinkalign.rewards import (
    RewardBreakdown,
    build_judge_prompt,
    compose_overall,
    cta_reward,
    lc_reward,
    parse_judge_score,
    score_candidate,
    score_rollout,
)
from thinkalign.grpo import (
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
from thinkalign.backends import (
    BackendConfig,
    BackendError,
    BackendTimeout,
    HttpGenerationClient,
    HttpJudgeClient,
    MockGenerationBackend,
    MockJudgeBackend,
    MockScript,
    RetryPolicy,
    SamplingParams,
)
from thinkalign.forge import (
    ForgeConfig,
    ForgeReport,
    QuestionPair,
    RlDatasetEntry,
    ScoredCandidate,
    SkipRecord,
    correct_indices,
    forge_dataset,
    select_pair,
)
from thinkalign.evalharness import EvalRecord, MetricReport, dw_acc, eval_item, macro_metrics

__version__ = "0.1.0"
