from pathlib import Path

import pytest

from sparta.eog.config import TrainConfig, build_config, config_hash, dump_config, load_config, read_config_file
from sparta.eog.errors import ConfigError, UsageError
from sparta.eog.models.model import SemanticType


def test_defaults() -> None:
    config = TrainConfig()
    assert config.batch_size == 2
    assert config.learning_rate == 0.002
    assert config.gradient_clipping == 10.0
    assert config.early_stop_patience == 10
    assert config.beta == 0.8
    assert config.iterations == 3
    assert config.num_classes == 2
    assert config.no_relation == 1


@pytest.mark.parametrize("variant,iterations", [("EoG", 3), ("Full", 1), ("NoInf", 0), ("Sent", 2)])
def test_default_iterations_per_variant(variant: str, iterations: int) -> None:
    assert build_config({"variant": variant}).iterations == iterations


def test_explicit_iterations_win() -> None:
    assert build_config({"inference_iterations": "0"}).iterations == 0


def test_noinf_with_iterations_is_rejected() -> None:
    with pytest.raises(ConfigError):
        build_config({"variant": "NoInf", "inference_iterations": 2})


def test_full_with_edge_ablation_is_rejected() -> None:
    with pytest.raises(ConfigError):
        build_config({"variant": "Full", "edges_mm": False})


def test_unknown_key_is_a_usage_error() -> None:
    with pytest.raises(UsageError):
        build_config({"hidden": 3})


def test_relation_types_from_string() -> None:
    config = build_config({"relation_types": "CID, GDA"})
    assert config.relation_types == ["CID", "GDA"]
    assert config.no_relation == 2


def test_dataset_preset_and_overrides(tmp_path: Path) -> None:
    path = tmp_path / "gda.conf"
    path.write_text("# tuned\nhidden_size = 32\nbatch_size=4  # larger\n")
    config = load_config(path, overrides={"batch_size": "5", "seed": None}, dataset="GDA")
    assert config.head_type == SemanticType.GENE
    assert config.relation_types == ["GDA"]
    assert config.hidden_size == 32
    assert config.batch_size == 5


def test_unknown_dataset_preset() -> None:
    with pytest.raises(ConfigError):
        load_config(dataset="BioRED")


def test_config_file_without_equals(tmp_path: Path) -> None:
    path = tmp_path / "bad.conf"
    path.write_text("hidden_size 32\n")
    with pytest.raises(ConfigError):
        read_config_file(path)


def test_dump_reads_back(tmp_path: Path) -> None:
    config = build_config({"variant": "Sent", "edges_mm": False, "regularization": 1e-3, "relation_types": ["CID", "X"], "inference_iterations": 1})
    path = tmp_path / "config.txt"
    path.write_text(dump_config(config))
    assert load_config(path) == config


def test_config_hash_is_stable() -> None:
    assert config_hash(TrainConfig()) == config_hash(build_config({}))
    assert config_hash(TrainConfig()) != config_hash(build_config({"seed": 1}))
    assert len(config_hash(TrainConfig())) == 12


def test_config_hash_uses_effective_iterations() -> None:
    assert config_hash(build_config({})) == config_hash(build_config({"inference_iterations": 3}))
    assert config_hash(build_config({"variant": "Sent"})) == config_hash(build_config({"variant": "Sent", "inference_iterations": 2}))
    assert config_hash(build_config({})) != config_hash(build_config({"inference_iterations": 2}))
