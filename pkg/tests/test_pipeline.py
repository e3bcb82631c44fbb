import json
from pathlib import Path

import numpy as np
import pytest

from embedrules.dataio import (
    read_features_csv,
    read_labels_csv,
    write_features_csv,
)
from embedrules.errors import ConfigError, IngestionMismatch
from embedrules.pipeline import (
    RunConfig,
    evaluate,
    run_local_explanation,
    run_pipeline,
    split_seed,
)

from fixture_data import base_config, make_workspace


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    dirpath = tmp_path_factory.mktemp("workspace")
    make_workspace(dirpath, seed=0)
    return dirpath


def run(dirpath, **overrides):
    doc = base_config(dirpath, **overrides)
    config = RunConfig.from_dict(doc)
    return run_pipeline(config), Path(doc["output_dir"])


class TestRunPipeline:
    def test_artifacts_and_accuracy(self, workspace):
        result, outdir = run(workspace, output_dir=str(workspace / "main"))
        for name in (
            "clusters.csv", "features.csv", "trials.csv", "summary.csv", "summary.md",
            "best_rulebase.json", "rules.md", "history.csv", "fitness.png",
            "partitions.png", "config.json",
        ):
            assert (outdir / name).exists(), name
        assert result["aggregate"]["accuracy"][0] >= 0.85
        assert result["k"] == 3

    def test_k_range_sweep_writes_silhouette(self, workspace):
        result, outdir = run(
            workspace,
            output_dir=str(workspace / "sweep"),
            k=None,
            k_range=[2, 5],
            trials=1,
            ga={"generations": 20, "population": 12},
        )
        assert (outdir / "silhouette.csv").exists()
        assert (outdir / "silhouette.png").exists()
        assert result["k"] == 3  # blobs are unambiguous

    def test_determinism_byte_identical(self, workspace):
        _, out1 = run(workspace, output_dir=str(workspace / "rep1"), trials=1)
        _, out2 = run(workspace, output_dir=str(workspace / "rep2"), trials=1)
        for name in ("best_rulebase.json", "trials.csv", "clusters.csv", "features.csv",
                     "summary.csv", "history.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_trials_split_equivalence(self, workspace):
        # fixed features and labels: a t-trial protocol must equal t
        # single-trial protocols run with the split seeds
        from embedrules.pipeline import fit_trials

        features = read_features_csv(workspace / "main" / "features.csv")
        _, labels = read_labels_csv(workspace / "main" / "clusters.csv")
        doc = base_config(workspace, trials=3)
        multi_config = RunConfig.from_dict(doc)
        multi_rows, _ = fit_trials(features, labels, multi_config, class_count=3)
        for i in (1, 2, 3):
            doc_i = base_config(workspace, trials=1, seed=split_seed(7, i))
            single_rows, _ = fit_trials(features, labels, RunConfig.from_dict(doc_i),
                                        class_count=3)
            srow, mrow = single_rows[0], multi_rows[i - 1]
            assert srow.seed == mrow.seed
            assert srow.accuracy == mrow.accuracy
            assert srow.mcc == mrow.mcc
            assert srow.rule_count == mrow.rule_count
            assert srow.antecedent_count == mrow.antecedent_count

    def test_aggregate_matches_recomputation(self, workspace):
        result, outdir = run(workspace, output_dir=str(workspace / "agg"), trials=3)
        rows = (outdir / "trials.csv").read_text().splitlines()[1:]
        accuracy = np.array([float(r.split(",")[2]) for r in rows])
        agg_mean, agg_std = result["aggregate"]["accuracy"]
        assert agg_mean == pytest.approx(accuracy.mean(), abs=1e-12)
        assert agg_std == pytest.approx(accuracy.std(), abs=1e-12)

    def test_train_fraction_reports_heldout(self, workspace):
        _, outdir = run(
            workspace,
            output_dir=str(workspace / "held"),
            trials=1,
            train_fraction=0.8,
        )
        header = (outdir / "trials.csv").read_text().splitlines()[0]
        assert "heldout_accuracy" in header and "heldout_mcc" in header

    def test_ingestion_mismatch_lists_ids(self, workspace, tmp_path):
        features = read_features_csv(workspace / "main" / "features.csv")
        features.ids[0] = "stranger"
        broken = tmp_path / "features.csv"
        write_features_csv(broken, features)
        doc = base_config(workspace, output_dir=str(tmp_path / "out"),
                          texts=None, features=str(broken))
        with pytest.raises(IngestionMismatch) as excinfo:
            run_pipeline(RunConfig.from_dict(doc))
        assert "stranger" in excinfo.value.offending_ids


class TestEvaluate:
    def test_round_trip_matches_fit_metrics(self, workspace):
        result, outdir = run(workspace, output_dir=str(workspace / "eval"), trials=2)
        best = result["best"]["summary"]
        metrics = evaluate(
            outdir / "best_rulebase.json",
            outdir / "features.csv",
            outdir / "clusters.csv",
        )
        assert metrics["accuracy"] == pytest.approx(best.accuracy, abs=1e-12)
        assert metrics["mcc"] == pytest.approx(best.mcc, abs=1e-12)

    def test_permuted_columns_bind_by_name(self, workspace, tmp_path):
        outdir = workspace / "eval"
        features = read_features_csv(outdir / "features.csv")
        perm = [3, 1, 0, 2]
        from embedrules.dataio import FeatureMatrix

        shuffled = FeatureMatrix(
            values=features.values[:, perm],
            columns=tuple(features.columns[j] for j in perm),
            ids=features.ids,
        )
        shuffled_path = tmp_path / "shuffled.csv"
        write_features_csv(shuffled_path, shuffled)
        straight = evaluate(outdir / "best_rulebase.json", outdir / "features.csv",
                            outdir / "clusters.csv")
        permuted = evaluate(outdir / "best_rulebase.json", shuffled_path,
                            outdir / "clusters.csv")
        assert straight["accuracy"] == permuted["accuracy"]
        assert straight["mcc"] == permuted["mcc"]

    def test_missing_variable_column_errors(self, workspace, tmp_path):
        outdir = workspace / "eval"
        features = read_features_csv(outdir / "features.csv")
        from embedrules.dataio import FeatureMatrix

        crippled = FeatureMatrix(
            values=features.values[:, :3],
            columns=tuple(list(features.columns[:2]) + ["mystery"]),
            ids=features.ids,
        )
        path = tmp_path / "crippled.csv"
        write_features_csv(path, crippled)
        with pytest.raises(ConfigError):
            evaluate(outdir / "best_rulebase.json", path, outdir / "clusters.csv")

    def test_empty_labels_errors(self, workspace, tmp_path):
        outdir = workspace / "eval"
        empty = tmp_path / "labels.csv"
        empty.write_text("id,cluster\n")
        with pytest.raises(IngestionMismatch):
            evaluate(outdir / "best_rulebase.json", outdir / "features.csv", empty)


class TestLocal:
    def test_subset_of_whole_set_matches_global(self, workspace):
        n = 90
        global_result, global_out = run(workspace, output_dir=str(workspace / "glob"), trials=1)
        doc = base_config(
            workspace,
            output_dir=str(workspace / "loc"),
            trials=1,
            local={"anchor": "r0000", "m": n},
        )
        local_result = run_local_explanation(RunConfig.from_dict(doc))
        local_out = local_result["outdir"]
        for name in ("trials.csv", "clusters.csv", "best_rulebase.json"):
            assert (global_out / name).read_bytes() == (local_out / name).read_bytes(), name

    def test_fixed_anchor_reproducible_membership(self, workspace):
        doc = base_config(
            workspace,
            output_dir=str(workspace / "loc2"),
            trials=1,
            local={"anchor": "r1005", "m": 40},
            ga={"generations": 15, "population": 10},
        )
        first = run_local_explanation(RunConfig.from_dict(doc))
        ids_first, _ = read_labels_csv(Path(first["outdir"]) / "clusters.csv")
        doc["output_dir"] = str(workspace / "loc3")
        second = run_local_explanation(RunConfig.from_dict(doc))
        ids_second, _ = read_labels_csv(Path(second["outdir"]) / "clusters.csv")
        assert ids_first == ids_second
        assert len(ids_first) == 40
        assert "r1005" in ids_first

    def test_random_anchor_is_seeded(self, workspace):
        doc = base_config(
            workspace,
            output_dir=str(workspace / "loc4"),
            trials=1,
            local={"anchor": "random", "m": 30},
            ga={"generations": 10, "population": 10},
        )
        first = run_local_explanation(RunConfig.from_dict(doc))
        doc["output_dir"] = str(workspace / "loc5")
        second = run_local_explanation(RunConfig.from_dict(doc))
        assert first["anchor"] == second["anchor"]

    def test_absent_anchor_errors(self, workspace):
        doc = base_config(
            workspace,
            output_dir=str(workspace / "loc6"),
            trials=1,
            local={"anchor": "ghost", "m": 10},
        )
        with pytest.raises(KeyError):
            run_local_explanation(RunConfig.from_dict(doc))

    def test_oversized_m_errors(self, workspace):
        doc = base_config(
            workspace,
            output_dir=str(workspace / "loc7"),
            trials=1,
            local={"anchor": "r0000", "m": 10_000},
        )
        with pytest.raises(ValueError):
            run_local_explanation(RunConfig.from_dict(doc))


class TestRunConfig:
    def test_texts_xor_features(self, workspace):
        doc = base_config(workspace)
        doc["features"] = doc["embeddings"]
        with pytest.raises(ConfigError):
            RunConfig.from_dict(doc)
        doc = base_config(workspace, texts=None)
        with pytest.raises(ConfigError):
            RunConfig.from_dict(doc)

    def test_k_xor_k_range(self, workspace):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(base_config(workspace, k_range=[2, 5]))
        with pytest.raises(ConfigError):
            RunConfig.from_dict(base_config(workspace, k=None))

    def test_unknown_keys_rejected(self, workspace):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(base_config(workspace, clusters=4))
        with pytest.raises(ConfigError):
            RunConfig.from_dict(base_config(workspace, ga={"speed": 11}))

    def test_from_toml_file_with_relative_paths(self, workspace, tmp_path):
        config_path = tmp_path / "run.toml"
        rel_embeddings = Path("..") / workspace.name / "embeddings.csv"
        config_path.write_text(
            "\n".join(
                [
                    f'embeddings = "{workspace / "embeddings.csv"}"',
                    f'texts = "{workspace / "texts.jsonl"}"',
                    'output_dir = "out"',
                    "k = 3",
                    "seed = 7",
                    "trials = 1",
                    'kind = "t1"',
                    "[ga]",
                    "generations = 5",
                    "population = 8",
                ]
            ),
            encoding="utf-8",
        )
        config = RunConfig.from_file(config_path)
        assert config.output_dir == tmp_path / "out"
        assert config.ga.generations == 5
        assert config.seed == 7

    def test_seed_required(self, workspace):
        doc = base_config(workspace)
        del doc["seed"]
        with pytest.raises(ConfigError):
            RunConfig.from_dict(doc)

    def test_config_echo_round_trips(self, workspace):
        result, outdir = run(workspace, output_dir=str(workspace / "echo"), trials=1)
        echoed = json.loads((outdir / "config.json").read_text())
        assert echoed["seed"] == 7
        assert echoed["k"] == 3
        assert echoed["ga"]["generations"] == 60
