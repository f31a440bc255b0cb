"""Pool-based active learning with an abstaining labeler.

The labeler may answer any query with "I don't know"; abstentions still
consume budget and are themselves informative.  Beliefs over labelings
and abstention patterns update asymmetrically (a label teaches both
sides, an abstention only the abstention side), and query strategies
score candidates by expected or worst-case one-step utility gain.
"""

from .core import (
    ABSTAIN,
    AbstentionPattern,
    Example,
    LabelAlphabet,
    Labeling,
    Pool,
    Response,
    SessionTrace,
    TraceStep,
    response_of,
)
from .datasets import (
    Dataset,
    parse_svmlight,
    render_svmlight,
    split_by_source,
    subset,
    synth_text_like,
)
from .engine import (
    DeterministicLabeler,
    ScriptedLabeler,
    SessionState,
    StochasticLabeler,
    run_session,
    session_from_json,
    session_to_json,
    start_session,
    step,
)
from .errors import (
    AblearnError,
    CapacityError,
    ContradictionError,
    ConvergenceError,
    InputError,
    MaskedLabelError,
    ParseError,
    ProtocolError,
)
from .evaluate import (
    DataSource,
    ExperimentConfig,
    ExperimentReport,
    run_experiment,
    write_report,
)
from .exact import DiscreteBelief, belief_from_json, belief_to_json, update_belief
from .map_models import (
    LinearModel,
    MapBelief,
    fit_map,
    model_from_checkpoint,
    model_to_checkpoint,
)
from .scenarios import (
    ScenarioInstance,
    ScenarioKind,
    ScenarioSpec,
    generate,
    read_bundle,
    write_bundle,
)
from .strategies import StrategyKind
from .verification import run_verification

__version__ = "0.1.0"

__all__ = [
    "ABSTAIN",
    "AblearnError",
    "AbstentionPattern",
    "CapacityError",
    "ContradictionError",
    "ConvergenceError",
    "DataSource",
    "Dataset",
    "DeterministicLabeler",
    "DiscreteBelief",
    "Example",
    "ExperimentConfig",
    "ExperimentReport",
    "InputError",
    "LabelAlphabet",
    "Labeling",
    "LinearModel",
    "MapBelief",
    "MaskedLabelError",
    "ParseError",
    "Pool",
    "ProtocolError",
    "Response",
    "ScenarioInstance",
    "ScenarioKind",
    "ScenarioSpec",
    "ScriptedLabeler",
    "SessionState",
    "SessionTrace",
    "StochasticLabeler",
    "StrategyKind",
    "TraceStep",
    "belief_from_json",
    "belief_to_json",
    "fit_map",
    "generate",
    "model_from_checkpoint",
    "model_to_checkpoint",
    "parse_svmlight",
    "read_bundle",
    "render_svmlight",
    "response_of",
    "run_experiment",
    "run_session",
    "run_verification",
    "session_from_json",
    "session_to_json",
    "split_by_source",
    "start_session",
    "step",
    "subset",
    "synth_text_like",
    "update_belief",
    "write_bundle",
    "write_report",
    "__version__",
]
