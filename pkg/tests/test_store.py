import json
import random

import pytest

from mathink.features import SimplifyParams
from mathink.fuzzy import FuzzyModel, ModelConfig
from mathink.knowledge import (
    HeuristicRule,
    RelPosition,
    SpatialPredicate,
)
from mathink.store import (
    RESERVOIR_CAP,
    Store,
    StoreError,
    default_knowledge,
    knowledge_from_dict,
    knowledge_to_dict,
    model_from_dict,
    model_to_dict,
)
from .conftest import random_model


@pytest.fixture
def store(tmp_path):
    return Store(tmp_path / "store")


def small_model():
    model = FuzzyModel.initial(["a", "b", "c"],
                               SimplifyParams(epsilon=0.05, target_vertices=3),
                               ModelConfig(terms_per_dim=3))
    from mathink.fuzzy import FuzzyRule

    return FuzzyModel(model.class_labels, model.partition,
                      [FuzzyRule((0,) * 6, 0), FuzzyRule((2,) * 6, 1)],
                      model.feature_params, model.config)


class TestModelRoundTrip:
    def test_save_then_load(self, store):
        model = small_model()
        store.save_model(model, provenance={"trainer": "ga", "seed": 7})
        again = store.load_model()
        assert again == model
        assert store.load_model_provenance() == {"trainer": "ga", "seed": 7}

    def test_generative_round_trip(self, store, rng):
        for i in range(100):
            dims = rng.choice([4, 6])
            model = random_model(rng, dims=dims, n_classes=rng.randint(1, 4),
                                 n_rules=rng.randint(1, 6))
            # widths below the persistence floor are not produced by training
            doc = model_to_dict(model)
            again = model_from_dict(doc)
            # deep compare oracle: walk the structure field by field
            assert again.class_labels == model.class_labels
            assert again.feature_params == model.feature_params
            assert again.config == model.config
            assert again.rules == model.rules
            for da, db in zip(again.partition.terms, model.partition.terms):
                for ma, mb in zip(da, db):
                    assert ma.center == mb.center and ma.sigma == mb.sigma

    def test_truncated_file_reports_partial(self, store):
        store.save_model(small_model())
        full = store.model_path.read_bytes()
        store.model_path.write_bytes(full[: len(full) // 2])
        with pytest.raises(StoreError, match="partial or corrupt"):
            store.load_model()

    def test_version_refusal(self, store):
        store.save_model(small_model())
        doc = json.loads(store.model_path.read_text())
        doc["version"] = 99
        store.model_path.write_text(json.dumps(doc))
        with pytest.raises(StoreError, match="version"):
            store.load_model()

    def test_invalid_model_reports_document_path(self, store):
        doc = model_to_dict(small_model())
        doc["model"]["partition"][2][1][1] = -0.5  # negative sigma
        with pytest.raises(StoreError, match=r"model\.partition\[2\]"):
            model_from_dict(doc)

    def test_missing_file(self, store):
        with pytest.raises(StoreError, match="not found"):
            store.load_model()


class TestAtomicity:
    def test_crash_between_write_and_rename_preserves_old_state(self, store, monkeypatch):
        model = small_model()
        store.save_model(model, provenance={"gen": 1})

        import mathink.store as store_mod

        def explode(src, dst):
            raise OSError("simulated crash before rename")

        monkeypatch.setattr(store_mod.os, "replace", explode)
        from dataclasses import replace as dc_replace

        newer = dc_replace(model, class_labels=["x", "y", "z"])
        with pytest.raises(OSError):
            store.save_model(newer, provenance={"gen": 2})
        monkeypatch.undo()

        # a fresh reader sees the previous consistent state
        fresh = Store(store.directory)
        assert fresh.load_model() == model
        assert fresh.load_model_provenance() == {"gen": 1}
        # and no temp litter is picked up as a document
        assert fresh.load_model() == model

    def test_durability_fresh_process_view(self, store):
        model = small_model()
        store.save_model(model)
        assert Store(store.directory).load_model() == model


class TestKnowledge:
    def test_defaults_round_trip(self):
        kf = default_knowledge()
        again = knowledge_from_dict(knowledge_to_dict(kf))
        assert again.table.default_row == kf.table.default_row
        assert again.table.classes == kf.table.classes
        assert again.table.geometry == kf.table.geometry
        assert again.rules == kf.rules

    def test_missing_knowledge_file_gives_defaults(self, store):
        kf = store.load_knowledge()
        assert kf.rules == default_knowledge().rules

    def test_overlay_rules_win_on_matching_id(self, store):
        kf = default_knowledge()
        replacement = HeuristicRule(
            "equals-from-bars", ("-", "-"),
            (SpatialPredicate(0, 1, "stacked-vertically", 2.0),),
            result="=", priority=120,
        )
        kf.upsert_overlay_rule(replacement)
        store.save_knowledge(kf)
        again = store.load_knowledge()
        effective = {r.rule_id: r for r in again.effective_rules()}
        assert effective["equals-from-bars"].priority == 120
        # base rules on disk are untouched
        base = {r.rule_id: r for r in again.rules}
        assert base["equals-from-bars"].priority == 100

    def test_overlay_positions(self, store):
        kf = default_knowledge()
        row = dict(kf.table.default_row)
        row[RelPosition.SUPERSCRIPT] = 0.0
        kf.overlay_positions["q"] = row
        store.save_knowledge(kf)
        table = store.load_knowledge().effective_table()
        assert table.coefficient("q", RelPosition.SUPERSCRIPT) == 0.0


class TestCorrections:
    def test_record_and_reload(self, store):
        store.record_correction([0.1, 0.9], "1", known_labels=["1", "2"])
        samples = store.load_corrections()
        assert samples == [([0.1, 0.9], "1")]

    def test_unknown_label_needs_flag(self, store):
        with pytest.raises(StoreError, match="not a model class"):
            store.record_correction([0.1], "zz", known_labels=["a"])
        store.record_correction([0.1], "zz", known_labels=["a"], allow_new_label=True)
        assert store.load_corrections() == [([0.1], "zz")]

    def test_fifo_cap(self, store):
        from mathink.store import atomic_write_json, corrections_to_dict

        seeded = [([float(i)], "a") for i in range(RESERVOIR_CAP - 2)]
        store.directory.mkdir(parents=True)
        atomic_write_json(store.corrections_path, corrections_to_dict(seeded))
        for i in range(10):
            store.record_correction([1000.0 + i], "a", known_labels=["a"])
        samples = store.load_corrections()
        assert len(samples) == RESERVOIR_CAP
        # oldest entries were evicted first
        assert samples[0] == ([8.0], "a")
        assert samples[-1] == ([1009.0], "a")

    def test_structural_correction_updates_overlay(self, store):
        rule = HeuristicRule("user-fix-1", ("x", "x"),
                             (SpatialPredicate(0, 1, "adjacent-right", 0.5),),
                             result="xx", priority=5)
        store.record_correction([0.5], "a", known_labels=["a"], overlay_rule=rule)
        kf = store.load_knowledge()
        assert [r.rule_id for r in kf.overlay_rules] == ["user-fix-1"]
