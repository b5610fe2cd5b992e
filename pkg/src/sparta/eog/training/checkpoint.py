#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""checkpoint.py: Saving and loading trained models.

A checkpoint is a directory holding four files:

* ``manifest.txt`` format tag, version, epoch, best dev F1 and the name of every tensor in storage order,
* ``params.bin`` the tensors, each as a little-endian uint32 rank, uint32 dimensions and little-endian float64 values,
* ``config.txt`` the training configuration as ``key=value`` lines,
* ``vocab.txt`` the vocabulary, one token per line.

Examples:
    Reload a trained model::

        from sparta.eog.training.checkpoint import load_checkpoint

        checkpoint = load_checkpoint("runs/3f2a9c1b7d4e/checkpoint")
        model = checkpoint.model()
"""
import logging
import struct
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from sparta.eog.autodiff.tensor import Array, Tensor
from sparta.eog.config import TrainConfig, dump_config, load_config
from sparta.eog.corpus.vocabulary import Vocabulary
from sparta.eog.errors import CheckpointError, ConfigError
from sparta.eog.models.constants import CHECKPOINT_FORMAT, CHECKPOINT_VERSION
from sparta.eog.network.model import EoGModel
from sparta.eog.network.params import ModelParams

logger = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
TENSORS = "params.bin"
CONFIG = "config.txt"
VOCABULARY = "vocab.txt"


class Checkpoint:
    """Trained parameters with everything needed to rebuild the model."""

    def __init__(self, config: TrainConfig, vocab: Vocabulary, tensors: Dict[str, Array], best_f1: float = 0.0, epoch: int = 0) -> None:
        self.config = config
        self.vocab = vocab
        self.tensors = tensors
        self.best_f1 = best_f1
        self.epoch = epoch

    @classmethod
    def from_model(cls, model: EoGModel, best_f1: float = 0.0, epoch: int = 0) -> "Checkpoint":
        return cls(model.config, model.vocab, model.params.snapshot(), best_f1, epoch)

    def model(self) -> EoGModel:
        params = ModelParams({name: Tensor(value.copy(), requires_grad=True, name=name) for name, value in self.tensors.items()})
        return EoGModel(self.config, params, self.vocab)


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    """Writes ``checkpoint`` into the directory ``path``, creating it if needed."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = [f"format={CHECKPOINT_FORMAT}", f"version={CHECKPOINT_VERSION}", f"epoch={checkpoint.epoch}", f"best_f1={checkpoint.best_f1!r}"]
    with open(directory / TENSORS, "wb") as f:
        for name, value in checkpoint.tensors.items():
            array = np.ascontiguousarray(value, dtype="<f8")
            f.write(struct.pack(f"<I{array.ndim}I", array.ndim, *array.shape))
            f.write(array.tobytes())
            manifest.append(f"tensor={name}")
    (directory / MANIFEST).write_text("\n".join(manifest) + "\n", encoding="utf-8")
    (directory / CONFIG).write_text(dump_config(checkpoint.config), encoding="utf-8")
    checkpoint.vocab.save(directory / VOCABULARY)
    logger.info(f"Saved checkpoint of epoch {checkpoint.epoch} (best F1 {checkpoint.best_f1:.4f}) to {directory}")
    return directory


def _read_manifest(path: Path) -> Tuple[Dict[str, str], List[str]]:
    entries: Dict[str, str] = {}
    names: List[str] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if "=" not in line:
            continue
        key, value = line.split("=", 1)
        if key == "tensor":
            names.append(value)
        else:
            entries[key] = value
    return entries, names


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Reads a checkpoint directory written by :func:`save_checkpoint`.

    Raises:
        CheckpointError: On a missing file, an unknown format or version, or a truncated tensor file.
    """
    directory = Path(path)
    try:
        manifest, names = _read_manifest(directory / MANIFEST)
        raw = (directory / TENSORS).read_bytes()
    except OSError as e:
        logger.error(f"Cannot read checkpoint {directory}: {e}")
        raise CheckpointError(f"cannot read checkpoint {directory}: {e}") from None
    if manifest.get("format") != CHECKPOINT_FORMAT or manifest.get("version") != str(CHECKPOINT_VERSION):
        raise CheckpointError(f"{directory}: unsupported checkpoint format {manifest.get('format')} version {manifest.get('version')}")

    tensors: Dict[str, Array] = {}
    offset = 0
    for name in names:
        try:
            (ndim,) = struct.unpack_from("<I", raw, offset)
            shape = struct.unpack_from(f"<{ndim}I", raw, offset + 4)
            offset += 4 * (ndim + 1)
            count = int(np.prod(shape, dtype=np.int64))
            values = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        except (struct.error, ValueError):
            logger.error(f"Tensor {name} of {directory} is truncated")
            raise CheckpointError(f"{directory}: tensor {name} is truncated") from None
        tensors[name] = values.astype(np.float64).reshape(shape)
        offset += 8 * count
    if offset != len(raw):
        raise CheckpointError(f"{directory}: {len(raw) - offset} trailing bytes in {TENSORS}")

    try:
        config = load_config(directory / CONFIG)
    except (OSError, ConfigError) as e:
        raise CheckpointError(f"{directory}: invalid configuration: {e}") from None
    vocab = Vocabulary.load(directory / VOCABULARY, lowercase=config.lowercase)
    return Checkpoint(config, vocab, tensors, best_f1=float(manifest.get("best_f1", "0.0")), epoch=int(manifest.get("epoch", "0")))
