"""Benchmark harness for online linear classifiers on a small clinical
tabular schema, with offline baselines and reproducible evaluation protocols."""

from .baselines import (
    Forest,
    ForestConfig,
    SvmConfig,
    forest_snapshot,
    offline_from_snapshot,
    rf_predict,
    rf_train,
    svm_objective,
    svm_snapshot,
    svm_train,
)
from .datamodel import (
    BINARY,
    CLINICAL_SCHEMA,
    NEGATIVE,
    NUMERIC,
    POSITIVE,
    ConfusionMatrix,
    Dataset,
    FeatureDescriptor,
    FeatureSchema,
    FirstOrderModel,
    Metrics,
    Sample,
    SecondOrderModel,
    UpdateOutcome,
    augment,
    compute_metrics,
    decide,
)
from .evaluation import (
    AggregateResult,
    ChunkAggregate,
    MeanStd,
    StreamEvalResult,
    chunk_boundaries,
    derive_seed,
    forest_sweep,
    incremental_protocol,
    metrics_report,
    online_eval,
    repeated_eval,
    replay_chunks,
    split_eval,
)
from .ingest import (
    ImputePolicy,
    ParseError,
    SchemaError,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    planted_rule,
    save_csv,
    stratified_split,
)
from .learners import (
    ALGORITHMS,
    DISPLAY_NAMES,
    LearnerConfig,
    OnlineLearner,
    from_json,
    from_snapshot,
    make_learner,
)

__version__ = "0.1.0"
