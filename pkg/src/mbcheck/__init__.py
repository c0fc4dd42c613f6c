"""Media background checks: retrieval-augmented drafting and
atomic-fact evaluation for media sources."""

from .config import RunConfig, load_config
from .corpus import BackgroundCheck, corpus_stats, load_dataset, parse_mbc_file
from .evaluation import (
    ChatJudge,
    FactScoreReport,
    OracleJudge,
    aggregate,
    instantiate_templates,
    score_pair,
)
from .lexmetrics import meteor, rouge_l
from .qa_downstream import EvidenceCase, answer_with_evidence, build_comparison
from .synthesis import MBCDraft, PipelineConfig, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BackgroundCheck",
    "ChatJudge",
    "EvidenceCase",
    "FactScoreReport",
    "MBCDraft",
    "OracleJudge",
    "PipelineConfig",
    "RunConfig",
    "aggregate",
    "answer_with_evidence",
    "build_comparison",
    "corpus_stats",
    "instantiate_templates",
    "load_config",
    "load_dataset",
    "meteor",
    "parse_mbc_file",
    "rouge_l",
    "run_pipeline",
    "score_pair",
    "__version__",
]
