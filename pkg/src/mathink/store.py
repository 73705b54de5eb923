"""File-backed persistence: model, knowledge base, correction reservoir.

Three JSON documents in a store directory, every one carrying a version
field: model.json (the classifier), knowledge.json (position table,
heuristic rules, per-user overlays), corrections.json (labeled samples
recorded from user corrections, FIFO-capped). Saves are atomic
(write-temp, fsync, rename), so readers never observe partial files.
Writers take an advisory lock; concurrent readers are fine.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock

from .features import SimplifyParams
from .fuzzy import (
    FuzzyModel,
    FuzzyPartition,
    FuzzyRule,
    GaussianMF,
    ModelConfig,
    ModelError,
)
from .knowledge import (
    HeuristicRule,
    KnowledgeError,
    PositionTable,
    RelPosition,
    default_heuristic_rules,
    default_position_table,
    rule_from_dict,
    rule_to_dict,
    table_from_dict,
    table_to_dict,
)

FORMAT_VERSION = 1
MODEL_FILE = "model.json"
KNOWLEDGE_FILE = "knowledge.json"
CORRECTIONS_FILE = "corrections.json"
RESERVOIR_CAP = 1024


class StoreError(Exception):
    """Load/save failure; message carries a path into the document."""


# ---------------------------------------------------------------------------
# Document <-> object mapping


def model_to_dict(model: FuzzyModel, provenance: dict | None = None) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "model": {
            "class_labels": list(model.class_labels),
            "feature_params": {
                "epsilon": model.feature_params.epsilon,
                "target_vertices": model.feature_params.target_vertices,
            },
            "config": {
                "terms_per_dim": model.config.terms_per_dim,
                "max_rules_per_class": model.config.max_rules_per_class,
                "inference": model.config.inference,
                "reject_threshold": model.config.reject_threshold,
                "smoothmax_tau": model.config.smoothmax_tau,
            },
            "partition": [
                [[mf.center, mf.sigma] for mf in dim_terms]
                for dim_terms in model.partition.terms
            ],
            "rules": [
                {"antecedent": list(r.antecedent), "consequent": r.consequent}
                for r in model.rules
            ],
        },
        "provenance": provenance or {},
    }
    return doc


def model_from_dict(doc: dict) -> FuzzyModel:
    if not isinstance(doc, dict):
        raise StoreError("model document: expected an object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise StoreError(f"model document at 'version': unsupported version {version!r}")
    raw = doc.get("model")
    if not isinstance(raw, dict):
        raise StoreError("model document at 'model': expected an object")
    path = "model"
    try:
        path = "model.feature_params"
        params = SimplifyParams(**raw["feature_params"])
        path = "model.config"
        config = ModelConfig(**raw["config"])
        path = "model.partition"
        terms = []
        for d, dim_terms in enumerate(raw["partition"]):
            path = f"model.partition[{d}]"
            row = tuple(GaussianMF(float(c), float(s)) for c, s in dim_terms)
            terms.append(row)
        partition = FuzzyPartition(tuple(terms))
        path = "model.rules"
        rules = []
        for i, r in enumerate(raw["rules"]):
            path = f"model.rules[{i}]"
            rules.append(FuzzyRule(tuple(int(t) for t in r["antecedent"]),
                                   int(r["consequent"])))
        path = "model.class_labels"
        labels = list(raw["class_labels"])
    except StoreError:
        raise
    except (KeyError, TypeError, ValueError, ModelError) as exc:
        raise StoreError(f"model document at '{path}': {exc}") from exc
    model = FuzzyModel(labels, partition, rules, params, config)
    try:
        model.validate()
    except ModelError as exc:
        raise StoreError(f"model document at 'model': {exc}") from exc
    return model


@dataclass
class KnowledgeFile:
    """Shipped knowledge plus the per-user overlay (never merged on disk)."""

    table: PositionTable
    rules: list[HeuristicRule]
    overlay_rules: list[HeuristicRule] = field(default_factory=list)
    overlay_positions: dict[str, dict[RelPosition, float]] = field(default_factory=dict)

    def effective_table(self) -> PositionTable:
        table = self.table
        for label, row in sorted(self.overlay_positions.items()):
            table = table.with_row(label, row)
        return table

    def effective_rules(self) -> list[HeuristicRule]:
        merged = {r.rule_id: r for r in self.rules}
        for r in self.overlay_rules:
            merged[r.rule_id] = r  # overlay wins on matching ids
        return list(merged.values())

    def upsert_overlay_rule(self, rule: HeuristicRule) -> None:
        self.overlay_rules = [r for r in self.overlay_rules if r.rule_id != rule.rule_id]
        self.overlay_rules.append(rule)


def default_knowledge() -> KnowledgeFile:
    return KnowledgeFile(default_position_table(), default_heuristic_rules())


def knowledge_to_dict(kf: KnowledgeFile) -> dict:
    def row_dict(row: dict[RelPosition, float]) -> dict:
        return {pos.value: row[pos] for pos in RelPosition}

    return {
        "version": FORMAT_VERSION,
        "position_table": table_to_dict(kf.table),
        "heuristic_rules": [rule_to_dict(r) for r in kf.rules],
        "overlay": {
            "rules": [rule_to_dict(r) for r in kf.overlay_rules],
            "position_classes": {
                label: row_dict(row) for label, row in sorted(kf.overlay_positions.items())
            },
        },
    }


def knowledge_from_dict(doc: dict) -> KnowledgeFile:
    if not isinstance(doc, dict):
        raise StoreError("knowledge document: expected an object")
    if doc.get("version") != FORMAT_VERSION:
        raise StoreError(
            f"knowledge document at 'version': unsupported version {doc.get('version')!r}"
        )
    path = "position_table"
    try:
        table = table_from_dict(doc["position_table"])
        path = "heuristic_rules"
        rules = [rule_from_dict(r) for r in doc["heuristic_rules"]]
        path = "overlay.rules"
        overlay = doc.get("overlay", {})
        overlay_rules = [rule_from_dict(r) for r in overlay.get("rules", [])]
        path = "overlay.position_classes"
        overlay_positions = {
            label: {RelPosition(name): float(k) for name, k in row.items()}
            for label, row in overlay.get("position_classes", {}).items()
        }
    except (KeyError, TypeError, ValueError, KnowledgeError) as exc:
        raise StoreError(f"knowledge document at '{path}': {exc}") from exc
    return KnowledgeFile(table, rules, overlay_rules, overlay_positions)


def corrections_to_dict(samples: list[tuple[list[float], str]]) -> dict:
    return {
        "version": FORMAT_VERSION,
        "samples": [{"features": list(f), "label": label} for f, label in samples],
    }


def corrections_from_dict(doc: dict) -> list[tuple[list[float], str]]:
    if not isinstance(doc, dict):
        raise StoreError("corrections document: expected an object")
    if doc.get("version") != FORMAT_VERSION:
        raise StoreError(
            f"corrections document at 'version': unsupported version {doc.get('version')!r}"
        )
    out = []
    try:
        for i, raw in enumerate(doc["samples"]):
            out.append(([float(v) for v in raw["features"]], str(raw["label"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise StoreError(f"corrections document at 'samples[{i}]': {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Atomic file IO


def atomic_write_json(path: Path, doc: dict) -> None:
    """Write-temp + fsync + rename: readers never see a partial document."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, ensure_ascii=False, indent=1, sort_keys=True)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def read_json(path: Path, what: str) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise StoreError(f"{what} file not found: {path}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise StoreError(
            f"{what} file {path} is partial or corrupt (byte {exc.pos}): {exc.msg}"
        ) from exc


class Store:
    """A store directory holding the three documents plus the write lock."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        self._lock = FileLock(str(self.directory / ".mathink.lock"))

    @property
    def model_path(self) -> Path:
        return self.directory / MODEL_FILE

    @property
    def knowledge_path(self) -> Path:
        return self.directory / KNOWLEDGE_FILE

    @property
    def corrections_path(self) -> Path:
        return self.directory / CORRECTIONS_FILE

    def _locked_write(self, path: Path, doc: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        with self._lock:
            atomic_write_json(path, doc)

    # -- model ---------------------------------------------------------------

    def save_model(self, model: FuzzyModel, provenance: dict | None = None) -> None:
        model.validate()
        self._locked_write(self.model_path, model_to_dict(model, provenance))

    def load_model(self) -> FuzzyModel:
        return model_from_dict(read_json(self.model_path, "model"))

    def load_model_provenance(self) -> dict:
        return read_json(self.model_path, "model").get("provenance", {})

    # -- knowledge -----------------------------------------------------------

    def save_knowledge(self, kf: KnowledgeFile) -> None:
        kf.table.validate()
        for rule in kf.rules + kf.overlay_rules:
            rule.validate()
        self._locked_write(self.knowledge_path, knowledge_to_dict(kf))

    def load_knowledge(self) -> KnowledgeFile:
        if not self.knowledge_path.exists():
            return default_knowledge()
        return knowledge_from_dict(read_json(self.knowledge_path, "knowledge"))

    def load(self) -> tuple[FuzzyModel, KnowledgeFile]:
        return self.load_model(), self.load_knowledge()

    # -- corrections ---------------------------------------------------------

    def load_corrections(self) -> list[tuple[list[float], str]]:
        if not self.corrections_path.exists():
            return []
        return corrections_from_dict(read_json(self.corrections_path, "corrections"))

    def record_correction(self, features: list[float], label: str,
                          known_labels: list[str],
                          overlay_rule: HeuristicRule | None = None,
                          allow_new_label: bool = False) -> None:
        """Append a corrected sample (and optional rule overlay), durably.

        The reservoir is FIFO-capped at RESERVOIR_CAP samples. A label
        outside the model requires the explicit add-class path.
        """
        if label not in known_labels and not allow_new_label:
            raise StoreError(
                f"corrected label {label!r} is not a model class "
                "(pass allow_new_label to add classes)"
            )
        with self._lock:
            samples = self.load_corrections()
            samples.append((list(features), label))
            if len(samples) > RESERVOIR_CAP:
                samples = samples[-RESERVOIR_CAP:]
            atomic_write_json(self.corrections_path, corrections_to_dict(samples))
            if overlay_rule is not None:
                kf = self.load_knowledge()
                kf.upsert_overlay_rule(overlay_rule)
                atomic_write_json(self.knowledge_path, knowledge_to_dict(kf))
