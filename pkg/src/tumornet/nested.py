"""Three-stage chained classifier.

Stage j consumes I_j = [previous stage's output, previous stage's full
input, stage-j fresh features], concatenated in that fixed order. Phase
I regresses the benign steady-state mass from p53 and the observed mass
window; Phase II regresses the detection mass with the max-mass feature
appended; Phase III turns the chain into a benign/metastasizing
decision. Phases train strictly in order and earlier stages stay frozen
while later ones learn.

Novelty training feeds Phase III a benign-only cohort, optionally
augmented with uniform-random counter-examples labeled 1; with zero
counter-examples the classifier collapses to the single class it was
shown, which is the expected degenerate behavior, not an error.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from tumornet.cohort import (Cohort, FeatureBounds, PatientRecord, Phase,
                             phase_target, synthesize_counter_examples,
                             to_feature_vector)
from tumornet.errors import DomainError, FormatError, UsageError
from tumornet.fileio import atomic_write_text
from tumornet.network import (Network, NetworkSpec, TrainConfig, Transfer,
                              batch_outputs, from_doc, init_network, to_doc,
                              train)

NESTED_FORMAT_VERSION = 1

# fresh-feature widths per phase: Phase II adds max_mass, Phase III adds
# nothing (the classifier sees only the chained vector)
FRESH_WIDTHS = {Phase.I: None, Phase.II: 1, Phase.III: 0}


@dataclass
class NestedModel:
    """The three frozen stages plus the scaling bounds they were trained
    under and the decision threshold."""

    net_i: Network
    net_ii: Network
    net_iii: Network
    bounds: FeatureBounds
    classification_threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.classification_threshold <= 1.0:
            raise DomainError(
                f"classification_threshold must lie in [0, 1], got "
                f"{self.classification_threshold}")
        in_i, out_i = self.net_i.spec.n_in, self.net_i.spec.n_out
        in_ii, out_ii = self.net_ii.spec.n_in, self.net_ii.spec.n_out
        in_iii = self.net_iii.spec.n_in
        if out_i != 1 or out_ii != 1:
            raise DomainError("stage I and II networks must be 1-output "
                              "regressors")
        want_ii = out_i + in_i + FRESH_WIDTHS[Phase.II]
        if in_ii != want_ii:
            raise DomainError(
                f"stage II input width {in_ii} breaks the chaining rule "
                f"(need {want_ii})")
        want_iii = out_ii + in_ii + FRESH_WIDTHS[Phase.III]
        if in_iii != want_iii:
            raise DomainError(
                f"stage III input width {in_iii} breaks the chaining rule "
                f"(need {want_iii})")
        if self.net_iii.spec.n_out != 1 or \
                self.net_iii.spec.transfers[-1] is not Transfer.SIGMOID:
            raise DomainError(
                "stage III must end in a single sigmoid output")


@dataclass
class PredictionResult:
    phase1_mass_scaled: float
    phase2_mass_scaled: float
    prob_m: float
    label: int


@dataclass(frozen=True)
class PhasePlan:
    """Architecture and training hyperparameters for one stage; hidden=0
    drops the hidden layer entirely."""

    hidden: int = 8
    transfer: Transfer = Transfer.SIGMOID
    config: TrainConfig = TrainConfig()

    def __post_init__(self):
        if self.hidden < 0:
            raise DomainError("hidden width must be >= 0")

    def spec_for(self, n_in: int) -> NetworkSpec:
        if self.hidden == 0:
            return NetworkSpec(layer_sizes=(n_in, 1),
                               transfers=(Transfer.SIGMOID,))
        return NetworkSpec(layer_sizes=(n_in, self.hidden, 1),
                           transfers=(self.transfer, Transfer.SIGMOID))


@dataclass(frozen=True)
class NestedTrainPlan:
    phase_i: PhasePlan = PhasePlan()
    phase_ii: PhasePlan = PhasePlan()
    phase_iii: PhasePlan = PhasePlan()
    threshold: float = 0.5

    def for_phase(self, phase: Phase) -> PhasePlan:
        return {Phase.I: self.phase_i, Phase.II: self.phase_ii,
                Phase.III: self.phase_iii}[phase]


def default_plan(master_seed: int = 0, learning_rate: float = 0.5,
                 epochs: int = 40, hidden: tuple = (8, 8, 8),
                 threshold: float = 0.5) -> NestedTrainPlan:
    """Per-phase plans with distinct seeds spawned from one master."""
    seeds = np.random.SeedSequence([master_seed, 101]).generate_state(6)

    def cfg(i):
        return TrainConfig(learning_rate=learning_rate, epochs=epochs,
                           init_seed=int(seeds[2 * i]),
                           shuffle_seed=int(seeds[2 * i + 1]))

    return NestedTrainPlan(
        phase_i=PhasePlan(hidden=hidden[0], config=cfg(0)),
        phase_ii=PhasePlan(hidden=hidden[1], config=cfg(1)),
        phase_iii=PhasePlan(hidden=hidden[2], config=cfg(2)),
        threshold=threshold)


@dataclass
class TrainedNested:
    model: NestedModel
    histories: dict = field(default_factory=dict)  # Phase -> (train, val)


def build_phase_input(phase: Phase, prev_output, prev_input,
                      fresh_inputs) -> np.ndarray:
    """[previous output || previous input || fresh features], the fixed
    concatenation order of the chaining rule."""
    prev_output = np.asarray(prev_output, dtype=np.float64)
    prev_input = np.asarray(prev_input, dtype=np.float64)
    fresh_inputs = np.asarray(fresh_inputs, dtype=np.float64)
    if phase is Phase.I:
        if prev_output.size or prev_input.size:
            raise DomainError("stage I takes no predecessor vectors")
        return fresh_inputs.copy()
    width = FRESH_WIDTHS[phase]
    if fresh_inputs.size != width:
        raise DomainError(
            f"stage {phase.value} takes {width} fresh features, got "
            f"{fresh_inputs.size}")
    if prev_output.size != 1:
        raise DomainError("predecessor output must be 1-wide")
    return np.concatenate([prev_output, prev_input, fresh_inputs])


def _feature_matrix(records, phase: Phase, bounds: FeatureBounds):
    return np.stack([to_feature_vector(r, phase, bounds) for r in records])


def _target_column(records, phase: Phase, bounds: FeatureBounds):
    return np.array([[phase_target(r, phase, bounds)] for r in records])


def chained_inputs(records, bounds: FeatureBounds, net_i: Network = None,
                   net_ii: Network = None):
    """Design matrices (X_I[, X_II[, X_III]]) for a record list, chaining
    through whichever frozen stages are supplied."""
    if not records:
        raise DomainError("no records to build inputs from")
    X1 = _feature_matrix(records, Phase.I, bounds)
    if net_i is None:
        return (X1,)
    O1 = batch_outputs(net_i, X1)
    P2 = _feature_matrix(records, Phase.II, bounds)
    X2 = np.hstack([O1, X1, P2])
    if net_ii is None:
        return (X1, X2)
    O2 = batch_outputs(net_ii, X2)
    X3 = np.hstack([O2, X2])
    return (X1, X2, X3)


def _simulated(records):
    return [r for r in records if not r.synthetic_counter]


def _benign(records):
    return [r for r in _simulated(records) if r.label == 0]


def _train_stage(plan: PhasePlan, X, Y, X_val, Y_val):
    net0 = init_network(plan.spec_for(X.shape[1]),
                        init_seed=plan.config.init_seed,
                        init_scale=plan.config.init_scale)
    return train(net0, X, Y, plan.config, X_val, Y_val)


def train_nested(train_cohort: Cohort, val_cohort: Cohort,
                 plan: NestedTrainPlan = None, *,
                 extra_phase3: list = None,
                 allow_single_class: bool = False) -> TrainedNested:
    """Train the three stages in order, each on the frozen predecessors'
    chained features.

    Phase I fits benign records only; Phase II fits every simulated
    record; Phase III fits every record including any extra_phase3
    counter-examples. Direct training demands both labels in the Phase
    III data (allow_single_class lifts that for novelty mode).
    """
    plan = plan or default_plan()
    if not train_cohort.records:
        raise UsageError("training cohort is empty")
    if not val_cohort.records:
        raise UsageError("validation cohort is empty")
    bounds = train_cohort.config.bounds

    benign_train = _benign(train_cohort.records)
    if not benign_train:
        raise UsageError("stage I needs benign training records")
    benign_val = _benign(val_cohort.records) or benign_train[:1]

    phase3_train = list(train_cohort.records) + list(extra_phase3 or [])
    labels3 = {r.label for r in phase3_train}
    if labels3 != {0, 1} and not allow_single_class:
        raise UsageError(
            "stage III training data carries a single class; direct "
            "training needs both labels")

    histories = {}

    X1 = _feature_matrix(benign_train, Phase.I, bounds)
    Y1 = _target_column(benign_train, Phase.I, bounds)
    X1v = _feature_matrix(benign_val, Phase.I, bounds)
    Y1v = _target_column(benign_val, Phase.I, bounds)
    res1 = _train_stage(plan.phase_i, X1, Y1, X1v, Y1v)
    histories[Phase.I] = (res1.train_history, res1.val_history)
    net_i = res1.net

    sim_train = _simulated(train_cohort.records)
    sim_val = _simulated(val_cohort.records) or sim_train[:1]
    _, X2 = chained_inputs(sim_train, bounds, net_i)
    Y2 = _target_column(sim_train, Phase.II, bounds)
    _, X2v = chained_inputs(sim_val, bounds, net_i)
    Y2v = _target_column(sim_val, Phase.II, bounds)
    res2 = _train_stage(plan.phase_ii, X2, Y2, X2v, Y2v)
    histories[Phase.II] = (res2.train_history, res2.val_history)
    net_ii = res2.net

    _, _, X3 = chained_inputs(phase3_train, bounds, net_i, net_ii)
    Y3 = _target_column(phase3_train, Phase.III, bounds)
    _, _, X3v = chained_inputs(val_cohort.records, bounds, net_i, net_ii)
    Y3v = _target_column(val_cohort.records, Phase.III, bounds)
    res3 = _train_stage(plan.phase_iii, X3, Y3, X3v, Y3v)
    histories[Phase.III] = (res3.train_history, res3.val_history)

    model = NestedModel(net_i=net_i, net_ii=net_ii, net_iii=res3.net,
                        bounds=bounds,
                        classification_threshold=plan.threshold)
    return TrainedNested(model=model, histories=histories)


def train_novelty(benign_cohort: Cohort, val_cohort: Cohort, n_counter: int,
                  plan: NestedTrainPlan = None,
                  counter_seed: int = 0) -> TrainedNested:
    """One-class training: the cohort must be all-benign; n_counter
    uniform-random records labeled 1 are appended to the Phase III
    training data only."""
    if any(r.label != 0 for r in benign_cohort.records):
        raise UsageError("novelty training needs a benign-only cohort")
    if n_counter < 0:
        raise UsageError(f"n_counter must be >= 0, got {n_counter}")
    counters = []
    if n_counter:
        ids = [r.id for r in benign_cohort.records] + \
            [r.id for r in val_cohort.records]
        counters = synthesize_counter_examples(
            n_counter, benign_cohort.config.bounds, counter_seed,
            W=benign_cohort.config.W, start_id=max(ids) + 1)
    return train_nested(benign_cohort, val_cohort, plan,
                        extra_phase3=counters, allow_single_class=True)


def predict(model: NestedModel, record: PatientRecord) -> PredictionResult:
    """Run the three chained forwards on one record."""
    scaled1, scaled2, prob, label = predict_batch(model, [record])
    return PredictionResult(phase1_mass_scaled=float(scaled1[0]),
                            phase2_mass_scaled=float(scaled2[0]),
                            prob_m=float(prob[0]), label=int(label[0]))


def predict_batch(model: NestedModel, records) -> tuple:
    """Vectorized predict: (phase1_scaled, phase2_scaled, prob_m, label)
    arrays over the record list. Ties at the threshold label 1."""
    records = list(records)
    if not records:
        raise DomainError("no records to predict on")
    X1, X2, X3 = chained_inputs(records, model.bounds, model.net_i,
                                model.net_ii)
    scaled1 = X2[:, 0].copy()
    scaled2 = X3[:, 0].copy()
    prob = batch_outputs(model.net_iii, X3)[:, 0]
    label = (prob >= model.classification_threshold).astype(np.int64)
    return scaled1, scaled2, prob, label


def model_to_doc(model: NestedModel) -> dict:
    return {
        "format_version": NESTED_FORMAT_VERSION,
        "phase_i": to_doc(model.net_i),
        "phase_ii": to_doc(model.net_ii),
        "phase_iii": to_doc(model.net_iii),
        "bounds": asdict(model.bounds),
        "classification_threshold": model.classification_threshold,
    }


def save_model(model: NestedModel, path) -> None:
    atomic_write_text(path, json.dumps(model_to_doc(model), indent=2) + "\n")


def model_from_doc(doc) -> NestedModel:
    if not isinstance(doc, dict):
        raise FormatError("model container must be a JSON object")
    version = doc.get("format_version")
    if version != NESTED_FORMAT_VERSION:
        raise FormatError(
            f"unknown container format_version {version!r}, expected "
            f"{NESTED_FORMAT_VERSION}")
    for name in ("phase_i", "phase_ii", "phase_iii", "bounds",
                 "classification_threshold"):
        if name not in doc:
            raise FormatError(f"container field '{name}' is missing")
    bounds_doc = doc["bounds"]
    if not isinstance(bounds_doc, dict):
        raise FormatError("container field 'bounds' must be an object")
    try:
        bounds = FeatureBounds(**bounds_doc)
    except (TypeError, DomainError) as exc:
        raise FormatError(f"container field 'bounds' is invalid: {exc}") from exc
    threshold = doc["classification_threshold"]
    if not isinstance(threshold, (int, float)) or isinstance(threshold, bool):
        raise FormatError(
            "container field 'classification_threshold' must be a number")
    try:
        return NestedModel(net_i=from_doc(doc["phase_i"]),
                           net_ii=from_doc(doc["phase_ii"]),
                           net_iii=from_doc(doc["phase_iii"]),
                           bounds=bounds,
                           classification_threshold=float(threshold))
    except DomainError as exc:
        raise FormatError(f"container violates chaining rules: {exc}") from exc


def load_model(path) -> NestedModel:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_doc(doc)
