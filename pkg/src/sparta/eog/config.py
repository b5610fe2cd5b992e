#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""config.py: Training configuration and its flat ``key=value`` file format.

Field names mirror the hyper-parameter table of the model (batch size, learning rate, gradient clipping, ...). Unknown keys are rejected and inconsistent
variant/flag combinations raise :class:`~sparta.eog.errors.ConfigError`.

Examples:
    Load a configuration file and override one value::

        from sparta.eog.config import load_config

        config = load_config("cdr.conf", overrides={"inference_iterations": "2"})
        print(config.iterations)
"""
import hashlib
import logging
from pathlib import Path
from typing import Dict, List, Literal, Mapping, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from sparta.eog.errors import ConfigError
from sparta.eog.models.constants import DATASET_PRESETS, DEFAULT_ITERATIONS
from sparta.eog.models.model import SemanticType

logger = logging.getLogger(__name__)

EDGE_FLAGS = ("edges_mm", "edges_me", "edges_ms", "edges_es", "edges_ss_direct", "edges_ss_indirect")


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    batch_size: int = Field(2, gt=0, description="Documents per optimisation step")
    learning_rate: float = Field(0.002, gt=0)
    gradient_clipping: float = Field(10.0, gt=0, description="Maximum global gradient norm")
    early_stop_patience: int = Field(10, gt=0, description="Epochs without dev improvement before stopping")
    regularization: float = Field(1e-4, ge=0, description="L2 weight on the weight matrices")
    dropout_word: float = Field(0.5, ge=0, lt=1, description="Dropout on embedded words")
    dropout_classification: float = Field(0.3, ge=0, lt=1, description="Dropout on the pair representation")
    word_dimension: int = Field(200, gt=0)
    hidden_size: int = Field(100, gt=0, description="BiLSTM hidden size per direction")
    node_type_dimension: int = Field(10, gt=0)
    distance_dimension: int = Field(10, gt=0)
    edge_dimension: int = Field(100, gt=0)
    beta: float = Field(0.8, ge=0, le=1, description="Interpolation weight of the previous edge representation")
    inference_iterations: Optional[int] = Field(None, ge=0, description="Inference steps N; edges then span up to 2**N hops")
    variant: Literal["EoG", "Full", "NoInf", "Sent"] = "EoG"
    max_epochs: int = Field(300, gt=0)
    seed: int = 0
    head_type: SemanticType = SemanticType.CHEMICAL
    tail_type: SemanticType = SemanticType.DISEASE
    relation_types: List[str] = Field(default_factory=lambda: ["CID"], min_length=1)
    lowercase: bool = True
    exclude_in_training: bool = Field(False, description="Also drop excluded (hypernym) pairs from the training pairs")
    edges_mm: bool = True
    edges_me: bool = True
    edges_ms: bool = True
    edges_es: bool = True
    edges_ss_direct: bool = True
    edges_ss_indirect: bool = True
    node_types: bool = Field(True, description="Append node type embeddings to node representations")
    mm_context: bool = Field(True, description="Attention context on mention-mention edges")
    distances: bool = Field(True, description="Distance embeddings on mention-mention and sentence-sentence edges")

    @model_validator(mode="after")
    def _check_variant(self) -> "TrainConfig":
        if self.variant == "NoInf" and self.inference_iterations:
            raise ValueError("the NoInf variant runs no inference; inference_iterations must be 0")
        ablated = [flag for flag in EDGE_FLAGS if not getattr(self, flag)]
        if ablated and self.variant in ("Full", "NoInf"):
            raise ValueError(f"edge ablations {ablated} cannot be combined with the {self.variant} variant")
        return self

    @property
    def iterations(self) -> int:
        return self.inference_iterations if self.inference_iterations is not None else DEFAULT_ITERATIONS[self.variant]

    @property
    def num_classes(self) -> int:
        return len(self.relation_types) + 1

    @property
    def no_relation(self) -> int:
        return len(self.relation_types)


def build_config(values: Mapping[str, object]) -> TrainConfig:
    """Validates raw values (strings allowed) into a :class:`TrainConfig`.

    Raises:
        ConfigError: On unknown keys, unparsable values or inconsistent combinations.
    """
    values = dict(values)
    if isinstance(values.get("relation_types"), str):
        values["relation_types"] = [v.strip() for v in str(values["relation_types"]).split(",") if v.strip()]
    try:
        return TrainConfig.model_validate(values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in error['loc']) or 'config'}: {error['msg']}" for error in e.errors())
        logger.error(f"Invalid configuration: {problems}")
        raise ConfigError(problems) from None


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Reads flat ``key=value`` lines; ``#`` starts a comment.

    Raises:
        ConfigError: On a line without ``=``.
    """
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, object]] = None, dataset: Optional[str] = None) -> TrainConfig:
    """Merges a dataset preset, a config file and flag overrides, later sources winning."""
    values: Dict[str, object] = {}
    if dataset is not None:
        if dataset not in DATASET_PRESETS:
            raise ConfigError(f"unknown dataset preset {dataset!r}; choose from {sorted(DATASET_PRESETS)}")
        values.update(DATASET_PRESETS[dataset])
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(values)


def dump_config(config: TrainConfig) -> str:
    """Renders the configuration as ``key=value`` lines that :func:`read_config_file` reads back."""
    lines = []
    for key, value in config.model_dump(mode="json").items():
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def config_hash(config: TrainConfig) -> str:
    """Short stable digest used to name run directories.

    The digest covers the effective iteration count, so leaving ``inference_iterations`` unset and setting the variant default give the same hash.
    """
    effective = config.model_copy(update={"inference_iterations": config.iterations})
    return hashlib.sha256(effective.model_dump_json().encode("utf-8")).hexdigest()[:12]
