"""Quality-diversity search over personality prompt lists."""
from .archive import (
    Archive,
    ArchiveConfig,
    Dimension,
    Elite,
    InsertStatus,
    archive_insert,
    cell_index,
    select_parent,
)
from .mutation import (
    MEASURE_PHRASES,
    Instruction,
    direction_to_instructions,
    initial_prompt,
    mutate_prompts,
    random_personalities,
    sample_direction,
)
from .search import (
    PLANQD,
    QD_MEASURES,
    RANDOM,
    ConfigError,
    Evaluation,
    EvaluationFailed,
    QDConfig,
    evaluate,
    load_config,
    load_evaluations,
    run_planqd,
    run_random_mutation,
)

__all__ = [
    "Archive", "ArchiveConfig", "ConfigError", "Dimension", "Elite", "Evaluation",
    "EvaluationFailed", "InsertStatus", "Instruction", "MEASURE_PHRASES", "PLANQD", "QDConfig",
    "QD_MEASURES", "RANDOM", "archive_insert", "cell_index", "direction_to_instructions",
    "evaluate", "initial_prompt", "load_config", "load_evaluations", "mutate_prompts",
    "random_personalities", "run_planqd", "run_random_mutation", "sample_direction", "select_parent",
]
