"""
Task Tests
==========

Async subcommand tasks on a tiny generated family dataset.
"""

import json
from pathlib import Path

import pandas as pd
import pytest

from tspkit.config import RunConfig
from tspkit.errors import MissingArtifactError, TspkitError
from tspkit.kg import save_dataset
from tspkit.store import MemoryStore, RunManifest
from tspkit.task import (
    ArtifactLayout,
    DatagenTask,
    EvaluateTask,
    PartitionTask,
    PredictTask,
    RunPipelineTask,
    SweepTask,
    TrainHtemTask,
    TrainKgeTask,
    default_values,
    resolve_dataset,
)

SMALL = dict(
    seed=1, n_people=60, n_families=2,
    hops=2, nmin=5, nmax=20, candidates=5,
    dim=6, lr=0.05, epochs=2, batch_size=64, negatives=2,
    htem_dim=6, htem_lr=0.01, htem_passes=1,
    rule_walks=500, max_iter=3,
    theta_ht=0.0, theta_hrt=0.5,
)


def small_config(out: Path, dataset=None, **overrides) -> RunConfig:
    return RunConfig(out=out, dataset=dataset, **{**SMALL, **overrides})


def manifests(store: MemoryStore):
    return {m.key_command: m for m in store.get_alldata(RunManifest)}


@pytest.fixture
def store():
    return MemoryStore()


@pytest.fixture
async def trained(tmp_path, family_dir, store):
    """Partition plus both models for the family dataset."""
    config = small_config(tmp_path / "run", family_dir)
    for task in (PartitionTask(config, store=store), TrainKgeTask(config, store=store), TrainHtemTask(config, store=store)):
        assert await task.run(progress=False), task.error
    return config


class TestLayout:

    def test_artifact_names(self, tmp_path):
        layout = ArtifactLayout(tmp_path)
        assert layout.kge_checkpoint("hake") == tmp_path / "kge_hake.ckpt"
        assert layout.predictions("gpht") == tmp_path / "predictions_gpht.tsv"
        assert layout.sweep("theta-ht") == (tmp_path / "sweep_theta-ht.csv", tmp_path / "sweep_theta-ht.json")
        assert layout.relative(tmp_path / "partition") == "partition"
        assert layout.relative(Path("/elsewhere/x.tsv")) == "/elsewhere/x.tsv"

    def test_dataset_falls_back_to_generated_directory(self, tmp_path):
        config = small_config(tmp_path)
        with pytest.raises(MissingArtifactError) as info:
            resolve_dataset(config)
        assert info.value.path == tmp_path / "dataset" / "train.txt"


class TestDatagen:

    async def test_writes_dataset_and_manifest(self, tmp_path, store):
        config = small_config(tmp_path)
        task = DatagenTask(config, store=store)
        assert await task.run(progress=False)

        for name in ("train.txt", "valid.txt", "test.txt", "generation.json"):
            assert (tmp_path / name).is_file()
        manifest = manifests(store)["datagen"]
        assert manifest.seed == 1
        assert manifest.artifacts["train"] == "train.txt"
        assert manifest.config["n_people"] == 60
        assert "total" in manifest.timings
        assert task.get_stats()["error"] is None

    async def test_same_seed_same_files(self, tmp_path):
        for name in ("first", "second"):
            assert await DatagenTask(small_config(tmp_path / name)).run(progress=False)
        assert (tmp_path / "first" / "train.txt").read_text() == (tmp_path / "second" / "train.txt").read_text()


class TestPrerequisites:

    async def test_partition_without_dataset(self, tmp_path, store):
        task = PartitionTask(small_config(tmp_path), store=store)
        assert not await task.run(progress=False)
        assert isinstance(task.error, MissingArtifactError)
        assert "tspkit datagen" in task.error.hint
        assert manifests(store) == {}

    async def test_predict_without_models(self, tmp_path, family_dir):
        task = PredictTask(small_config(tmp_path, family_dir), "kgetsp")
        assert not await task.run(progress=False)
        assert isinstance(task.error, MissingArtifactError)
        assert task.error.path.name == "kge_hake.ckpt"

    async def test_evaluate_without_predictions(self, tmp_path, family_dir):
        task = EvaluateTask(small_config(tmp_path, family_dir), "cwa")
        assert not await task.run(progress=False)
        assert isinstance(task.error, MissingArtifactError)
        assert "tspkit predict" in task.error.hint

    def test_unknown_method(self, tmp_path):
        with pytest.raises(ValueError, match="Unknown prediction method"):
            PredictTask(small_config(tmp_path), "oracle")

    async def test_checkpoint_from_another_dataset(self, tmp_path, trained, toy_split):
        other = save_dataset(toy_split, tmp_path / "toy")
        config = small_config(trained.out, other)
        task = PredictTask(config, "kgetsp")
        assert not await task.run(progress=False)
        assert isinstance(task.error, TspkitError)
        assert "retrain" in str(task.error)


class TestCommands:

    async def test_partition_and_training_manifests(self, trained, store):
        found = manifests(store)
        assert set(found) == {"partition", "train-kge", "train-htem"}
        assert found["train-kge"].key_artifact == "kge_hake.ckpt"
        assert found["train-kge"].details["epochs"] == 2
        assert found["train-htem"].details["passes"] == 1
        assert 0 < found["partition"].details["remaining_fraction"] <= 1
        assert (trained.out / "partition" / "manifest.json").is_file()

    async def test_gpht_then_evaluate(self, trained, store):
        predict = PredictTask(trained, "gpht", store=store)
        assert await predict.run(progress=False), predict.error
        assert predict.artifact == trained.out / "predictions_gpht.tsv"
        stages = [row["stage"] for row in predict.details["reduction"]]
        assert stages == ["full", "post_partition", "post_htem", "final"]

        for mode in ("cwa", "powa"):
            evaluate = EvaluateTask(trained, mode, predict.artifact, store=store)
            assert await evaluate.run(progress=False), evaluate.error
            saved = json.loads((trained.out / f"evaluation_predictions_gpht_{mode}.json").read_text())
            assert saved["key_assumption"] == mode
            assert saved["report"]["n_predict"] == predict.details["predicted"]
            assert 0.0 <= evaluate.report.f_tsp <= 1.0

        assert "evaluate-powa-predictions_gpht" in manifests(store)

    async def test_baselines(self, trained, store):
        for method in ("ruletensor", "kgetsp"):
            task = PredictTask(trained, method, store=store)
            assert await task.run(progress=False), task.error
            assert (trained.out / f"predictions_{method}.tsv").is_file()
        assert (trained.out / "rules.tsv").is_file()
        assert manifests(store)["predict-ruletensor"].artifacts["rules"] == "rules.tsv"

    async def test_evaluating_the_test_split_is_perfect(self, tmp_path, family_dir):
        config = small_config(tmp_path, family_dir)
        task = EvaluateTask(config, "cwa", family_dir / "test.txt")
        assert await task.run(progress=False), task.error
        assert task.report.jprecision == pytest.approx(1.0)
        assert task.report.f_tsp == pytest.approx(1.0)
        assert (tmp_path / "evaluation_test_cwa.json").is_file()


class TestSweep:

    def test_default_values(self):
        assert default_values("theta-hrt", "pairre")[0] == 100.0
        assert default_values("theta-ht", "hake") == [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4]
        with pytest.raises(ValueError, match="Unknown sweep parameter"):
            default_values("theta-x", "hake")

    async def test_theta_hrt_sweep(self, trained, store):
        task = SweepTask(trained, "theta-hrt", values=[1.0, 0.5], store=store)
        assert await task.run(progress=False), task.error
        table = pd.read_csv(trained.out / "sweep_theta-hrt.csv")
        assert table["value"].tolist() == [1.0, 0.5]
        assert {"cwa_f_tsp", "powa_rs_tsp", "n_predict"} <= set(table.columns)
        # a looser threshold keeps at least as many triples
        assert table["n_predict"].iloc[1] >= table["n_predict"].iloc[0]
        assert json.loads((trained.out / "sweep_theta-hrt.json").read_text())[0]["parameter"] == "theta-hrt"
        assert "sweep-theta-hrt" in manifests(store)

    async def test_theta_ht_sweep_matches_single_predictions(self, trained):
        task = SweepTask(trained, "theta-ht", values=[0.2, 0.6])
        assert await task.run(progress=False), task.error
        for value, count in zip([0.2, 0.6], task.table["n_predict"].tolist()):
            single = PredictTask(trained.model_copy(update={"theta_ht": value}), "gpht")
            assert await single.run(progress=False)
            assert single.details["predicted"] == count


class TestRunPipeline:

    async def test_full_run_generates_data(self, tmp_path, store):
        task = RunPipelineTask(small_config(tmp_path), store=store)
        assert await task.run(progress=True), task.error
        assert task.get_stats()["steps"] == [
            "datagen", "partition", "train-kge", "train-htem", "predict-gpht",
            "evaluate-cwa-predictions_gpht", "evaluate-powa-predictions_gpht",
        ]
        assert (tmp_path / "dataset" / "train.txt").is_file()
        assert (tmp_path / "evaluation_predictions_gpht_powa.json").is_file()
        assert len(task.get_stats()["completed"]) == 7

    async def test_stops_at_first_failure(self, tmp_path, store):
        task = RunPipelineTask(small_config(tmp_path, tmp_path / "absent"), store=store)
        assert not await task.run(progress=False)
        assert isinstance(task.error, MissingArtifactError)
        assert list(task.results) == ["partition"]
