"""
Configuration Tests
===================

Defaults, key=value file layering, validation and seed derivation.
"""

from pathlib import Path

import pytest

from conftest import write_lines
from tspkit.config import (
    Assumption,
    HtemTrainConfig,
    RunConfig,
    derive_seed,
    load_run_config,
    read_config_file,
)
from tspkit.errors import ConfigError

TEMPLATE = Path(__file__).parent / "config_template.env"


def test_defaults_follow_the_experimental_settings():
    config = RunConfig()
    assert config.dim == 500
    assert config.lr == 0.001
    assert config.htem_lr == 3e-5
    assert config.query_fraction == 0.2
    assert config.theta_sim == 0.8
    assert (config.theta_conf, config.theta_hc) == (0.85, 0.05)
    assert config.max_iter == 40
    assert config.model == "hake"


def test_file_then_flags(tmp_path):
    path = write_lines(tmp_path / "run.env", ["# comment", "THETA_HRT=0.5", "model=pairre", "hops=3"])
    config = load_run_config(path, {"hops": 4, "theta_ht": None})

    assert config.theta_hrt == 0.5
    assert config.model == "pairre"
    assert config.hops == 4
    assert config.theta_ht == RunConfig().theta_ht


def test_dashed_keys_are_accepted(tmp_path):
    path = write_lines(tmp_path / "run.env", ["theta-conf=0.9"])
    assert read_config_file(path) == {"theta_conf": "0.9"}


def test_unknown_key(tmp_path):
    path = write_lines(tmp_path / "run.env", ["learning_speed=3"])
    with pytest.raises(ConfigError, match="learning_speed"):
        load_run_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.env")


@pytest.mark.parametrize("overrides", [
    {"theta_ht": 1.5},
    {"theta_hrt": 0},
    {"nmin": 50, "nmax": 40},
    {"hops": 0},
    {"model": "transe"},
    {"htem_dim": 10},
])
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        load_run_config(overrides=overrides)


def test_template_loads():
    config = load_run_config(TEMPLATE)
    assert config.seed == 0
    assert config.entity_attn is True
    assert config.use_valid is False


def test_module_seeds_are_stable_and_distinct():
    assert derive_seed(7, "kge") == derive_seed(7, "kge")
    assert derive_seed(7, "kge") != derive_seed(7, "htem")
    assert derive_seed(7, "kge") != derive_seed(8, "kge")


def test_sub_configs():
    config = load_run_config(overrides={
        "seed": 3, "model": "pairre", "dim": 20, "htem_dim": 12, "nmin": 4, "nmax": 9,
        "entity_attn": False, "theta_sim": 0.6,
    })

    kge = config.kge_config()
    assert (kge.kind, kge.dim, kge.seed) == ("pairre", 20, derive_seed(3, "kge"))

    htem = config.htem_config()
    assert (htem.dim, htem.entity_attention, htem.relation_attention) == (12, False, True)
    assert htem.seed == derive_seed(3, "htem")

    params = config.partition_params()
    assert (params.n_min, params.n_max, params.seed) == (4, 9, derive_seed(3, "partition"))

    assumption = config.assumption("powa")
    assert assumption.mode == Assumption.RS_POWA
    assert assumption.similarity_threshold == 0.6

    ratios = config.split_ratios()
    assert ratios.train == pytest.approx(0.72)


def test_htem_dim_must_split_into_parts():
    with pytest.raises(ValueError):
        HtemTrainConfig(kind="hake", dim=16)
    assert HtemTrainConfig(kind="pairre", dim=16).dim == 16


def test_manifest_is_json_ready(tmp_path):
    manifest = load_run_config(overrides={"dataset": tmp_path}).to_manifest()
    assert manifest["dataset"] == str(tmp_path)
    assert manifest["out"] == "output"
