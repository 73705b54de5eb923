"""Per-session event processing: recognition, re-analysis, corrections,
background training with atomic model publication.

Every applied event triggers a full re-analysis of the session, so strokes
may arrive in any order and edits are always reflected. One lock per
session keeps its events strictly ordered; training runs on a separate
thread against a model copy and publishes by swapping one reference.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

import numpy as np

from .expr import ExprNode, RowNode, node_to_dict
from .features import extract_features
from .fuzzy import (
    FuzzyModel,
    FuzzyRule,
    classification_from_scores,
    pack_partition,
    score_batch,
)
from . import kernels
from .ink import InkError, InkSession, Stroke, bbox_of
from .render import render_latex
from .store import KnowledgeFile, Store, StoreError
from .structure import AnalysisResult, RecognizedStroke, analyze
from .train_cg import CGConfig, run_cg
from .train_ga import GAConfig, run_ga


class EngineError(ValueError):
    """Invalid event for the current session state."""


# -- events ------------------------------------------------------------------


@dataclass(frozen=True)
class StrokeAdded:
    stroke: Stroke


@dataclass(frozen=True)
class StrokeDeleted:
    stroke_id: str


@dataclass(frozen=True)
class CorrectionApplied:
    """target: {"kind": "stroke", "id": ...} label fix, or {"kind": "rule"}
    with a heuristic-rule payload in `value` (structural correction)."""

    target: dict
    value: object


@dataclass(frozen=True)
class TrainRequested:
    kind: str  # "ga" | "cg"


Event = StrokeAdded | StrokeDeleted | CorrectionApplied | TrainRequested


@dataclass
class SessionState:
    session: InkSession = field(default_factory=InkSession)
    labels: dict[str, tuple[str, float]] = field(default_factory=dict)
    corrections: dict[str, str] = field(default_factory=dict)  # pinned labels
    symbols: list = field(default_factory=list)
    tree: ExprNode = RowNode(())
    latex: str = ""
    diagnostics: list[str] = field(default_factory=list)
    revision: int = 0


def classify_stroke(model: FuzzyModel, stroke: Stroke) -> tuple[str, float]:
    """Features + classify; below the reject threshold reports "unknown"."""
    features = extract_features(stroke, model.feature_params)
    scores = score_batch(model, np.asarray([features]))[0]
    result = classification_from_scores(model, scores)
    return result.label, result.confidence


def _reanalyze(state: SessionState, knowledge: KnowledgeFile) -> None:
    recognized = []
    for stroke in state.session.strokes:
        label, confidence = state.labels[stroke.id]
        pinned = state.corrections.get(stroke.id)
        if pinned is not None:
            label, confidence = pinned, 1.0
        recognized.append(RecognizedStroke(stroke.id, label, bbox_of(stroke), confidence))
    result: AnalysisResult = analyze(recognized, knowledge.effective_table(),
                                     knowledge.effective_rules())
    state.symbols = result.symbols
    state.tree = result.tree
    state.latex = render_latex(result.tree)
    state.diagnostics = result.diagnostics


def handle_pure(event: Event, state: SessionState, model: FuzzyModel,
                knowledge: KnowledgeFile) -> SessionState:
    """Apply one event without side effects (training, persistence).

    This is the per-session sequential semantics the service must be
    indistinguishable from; the engine builds on it and adds durability
    and background training.
    """
    out = SessionState(
        session=InkSession(list(state.session.strokes), list(state.session.edit_log)),
        labels=dict(state.labels),
        corrections=dict(state.corrections),
        revision=state.revision,
    )
    if isinstance(event, StrokeAdded):
        try:
            out.session.add(event.stroke)
        except InkError as exc:
            raise EngineError(str(exc)) from exc
        out.labels[event.stroke.id] = classify_stroke(model, event.stroke)
    elif isinstance(event, StrokeDeleted):
        try:
            out.session.delete(event.stroke_id)
        except InkError as exc:
            raise EngineError(str(exc)) from exc
        out.labels.pop(event.stroke_id, None)
        out.corrections.pop(event.stroke_id, None)
    elif isinstance(event, CorrectionApplied):
        if event.target.get("kind") == "stroke":
            sid = event.target.get("id")
            if out.session.find(sid) is None:
                raise EngineError(f"unknown stroke id {sid!r}")
            out.corrections[sid] = str(event.value)
        elif event.target.get("kind") != "rule":
            raise EngineError(f"unknown correction target {event.target!r}")
    elif isinstance(event, TrainRequested):
        if event.kind not in ("ga", "cg"):
            raise EngineError(f"unknown training kind {event.kind!r}")
    else:
        raise EngineError(f"unknown event {event!r}")
    _reanalyze(out, knowledge)
    out.revision += 1
    return out


def sample_antecedent(model: FuzzyModel, features: list[float]) -> tuple[int, ...]:
    centers, sigmas, mf_dim, offsets = pack_partition(model.partition)
    row = kernels.best_terms(centers, sigmas, mf_dim, offsets,
                             np.asarray([features], dtype=np.float64))[0]
    return tuple(int(t) for t in row)


def upsert_rule(model: FuzzyModel, antecedent: tuple[int, ...],
                class_index: int) -> FuzzyModel:
    """New model whose rule base maps this antecedent to the class."""
    rules = [r for r in model.rules if r.antecedent != antecedent]
    rules.append(FuzzyRule(antecedent, class_index))
    return replace(model, rules=rules)


@dataclass
class TrainOutcome:
    kind: str
    metrics: dict


class Engine:
    """Session service: per-session serial events, shared model snapshot."""

    def __init__(self, model: FuzzyModel, knowledge: KnowledgeFile,
                 store: Store | None = None,
                 cg_config: CGConfig | None = None,
                 ga_config: GAConfig | None = None):
        model.validate()
        self._model = model
        self._knowledge = knowledge
        self._store = store
        self._cg_config = cg_config or CGConfig(max_iterations=40)
        self._ga_config = ga_config or GAConfig(population_size=20, generations=20)
        self._model_lock = threading.Lock()
        self._sessions: dict[str, SessionState] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._next_session = 0
        self._training_threads: list[threading.Thread] = []

    # -- model snapshot -------------------------------------------------------

    @property
    def model(self) -> FuzzyModel:
        with self._model_lock:
            return self._model

    def _publish_model(self, model: FuzzyModel) -> None:
        with self._model_lock:
            self._model = model
        if self._store is not None:
            self._store.save_model(model)
        self._refresh_sessions()

    def _refresh_sessions(self) -> None:
        with self._registry_lock:
            ids = list(self._sessions)
        for session_id in ids:
            lock = self._session_locks.get(session_id)
            if lock is None:
                continue
            with lock:
                state = self._sessions[session_id]
                if not state.session.strokes:
                    continue  # nothing derived from the model here
                model = self.model
                for stroke in state.session.strokes:
                    state.labels[stroke.id] = classify_stroke(model, stroke)
                _reanalyze(state, self._knowledge)
                state.revision += 1

    # -- sessions ---------------------------------------------------------------

    def create_session(self) -> str:
        with self._registry_lock:
            session_id = f"s{self._next_session}"
            self._next_session += 1
            self._sessions[session_id] = SessionState()
            self._session_locks[session_id] = threading.Lock()
        return session_id

    def _holder(self, session_id: str) -> tuple[threading.Lock, SessionState]:
        with self._registry_lock:
            if session_id not in self._sessions:
                raise EngineError(f"unknown session {session_id!r}")
            return self._session_locks[session_id], self._sessions[session_id]

    def snapshot(self, session_id: str) -> SessionState:
        lock, _ = self._holder(session_id)
        with lock:
            return self._sessions[session_id]

    def apply(self, session_id: str, event: Event) -> SessionState:
        """Apply one event; events of one session execute strictly in order."""
        lock, _ = self._holder(session_id)
        with lock:
            state = self._sessions[session_id]
            new_state = handle_pure(event, state, self.model, self._knowledge)
            self._sessions[session_id] = new_state
            if isinstance(event, CorrectionApplied):
                self._record_correction(session_id, event, new_state)
            if isinstance(event, TrainRequested):
                self._start_training(event.kind)
            return new_state

    # -- corrections and training ----------------------------------------------

    def _record_correction(self, session_id: str, event: CorrectionApplied,
                           state: SessionState) -> None:
        model = self.model
        if event.target.get("kind") == "rule":
            from .knowledge import rule_from_dict

            rule = rule_from_dict(event.value)
            self._knowledge.upsert_overlay_rule(rule)
            if self._store is not None:
                self._store.save_knowledge(self._knowledge)
            _reanalyze(state, self._knowledge)  # the new rule applies now
            return
        sid = event.target["id"]
        label = str(event.value)
        if label not in model.class_labels:
            raise EngineError(f"corrected label {label!r} is not a model class")
        stroke = state.session.find(sid)
        features = extract_features(stroke, model.feature_params)
        if self._store is not None:
            self._store.record_correction(features, label, model.class_labels)
        antecedent = sample_antecedent(model, features)
        updated = upsert_rule(model, antecedent, model.class_labels.index(label))
        with self._model_lock:
            self._model = updated
        if self._store is not None:
            self._store.save_model(updated)
        self._start_training("cg")

    def _training_batch(self) -> tuple[np.ndarray, np.ndarray]:
        model = self.model
        samples = self._store.load_corrections() if self._store is not None else []
        samples = samples[-32:]  # the corrected sample plus recent reservoir
        index = {label: i for i, label in enumerate(model.class_labels)}
        X, y = [], []
        for features, label in samples:
            if label in index and len(features) == model.feature_count:
                X.append(features)
                y.append(index[label])
        return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)

    def _start_training(self, kind: str) -> threading.Thread:
        thread = threading.Thread(target=self._train, args=(kind,), daemon=True)
        self._training_threads.append(thread)
        thread.start()
        return thread

    def _train(self, kind: str) -> TrainOutcome:
        return self.train_now(kind)

    def train_now(self, kind: str) -> TrainOutcome:
        """Run a trainer against a model copy, then publish atomically."""
        X, y = self._training_batch()
        if X.shape[0] == 0:
            return TrainOutcome(kind, {"skipped": "no training samples"})
        model = self.model
        if kind == "cg":
            result = run_cg(self._cg_config, model, X, y)
            self._publish_model(result.model)
            return TrainOutcome(kind, {
                "iterations": result.iterations,
                "converged": result.converged,
                "initial_loss": result.initial_loss,
                "final_loss": result.final_loss,
            })
        if kind == "ga":
            result = run_ga(self._ga_config, X, y, model)
            self._publish_model(result.model)
            return TrainOutcome(kind, {
                "generations": len(result.history) - 1,
                "best_fitness": result.best_fitness,
            })
        raise EngineError(f"unknown training kind {kind!r}")

    def join_training(self, timeout: float = 30.0) -> None:
        """Wait for the training threads started so far (tests, shutdown)."""
        threads, self._training_threads = self._training_threads, []
        for thread in threads:
            thread.join(timeout)


def state_to_message(state: SessionState) -> dict:
    return {
        "v": 1,
        "revision": state.revision,
        "symbols": [
            {
                "id": inst.id,
                "label": inst.label,
                "confidence": inst.confidence,
                "bbox": [inst.bbox.min_x, inst.bbox.min_y, inst.bbox.max_x, inst.bbox.max_y],
                "strokes": list(inst.stroke_ids),
            }
            for inst in state.symbols
        ],
        "tree": node_to_dict(state.tree),
        "latex": state.latex,
        "diagnostics": list(state.diagnostics),
    }
