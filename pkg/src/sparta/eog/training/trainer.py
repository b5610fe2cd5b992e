#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""trainer.py: Batched training with gradient clipping, Adam and early stopping on dev F1.

Randomness comes from three generators spawned from the configured seed: one for parameter initialisation, one for shuffling and one for dropout. Two
runs with the same seed and data therefore produce identical loss sequences.

Examples:
    Train on the CDR training split and keep the best model::

        from sparta.eog.config import load_config
        from sparta.eog.training.checkpoint import save_checkpoint
        from sparta.eog.training.trainer import Trainer

        config = load_config(dataset="CDR")
        trainer = Trainer(config, vocab, embeddings=table)
        checkpoint = trainer.train(train_documents, dev_documents)
        save_checkpoint("runs/cdr/checkpoint", checkpoint)
"""
import logging
import math
import time
from pathlib import Path
from typing import List, Optional, Sequence, Set, Union

import numpy as np
from tqdm import tqdm

from sparta.eog.autodiff.optim import AdamState, adam_step, clip_gradients
from sparta.eog.autodiff.tensor import Array, Tape, backward, concat, using_tape
from sparta.eog.config import TrainConfig
from sparta.eog.corpus.documents import ExclusionKey
from sparta.eog.corpus.vocabulary import Vocabulary
from sparta.eog.errors import DataError, DivergenceError
from sparta.eog.evaluation.metrics import score
from sparta.eog.models.model import Document, EpochRecord, Metrics
from sparta.eog.network.classifier import pair_loss
from sparta.eog.network.model import EoGModel, Example, training_examples
from sparta.eog.training.checkpoint import Checkpoint

logger = logging.getLogger(__name__)


class Trainer:
    """Owns a model, its optimiser state and the generators of one training run.

    Args:
        config (TrainConfig): Hyper-parameters, variant and seed.
        vocab (Vocabulary): Vocabulary of the training documents.
        embeddings (Optional[Array]): Pretrained word embedding table aligned with ``vocab``.
        exclusions (Optional[Set[ExclusionKey]]): Pairs left out of dev scoring, and of training when ``config.exclude_in_training`` is set.
        progress (bool): Show a progress bar over the batches of each epoch.
        log_path (Optional[Union[str, Path]]): File receiving one JSON record per epoch.
    """

    def __init__(
        self,
        config: TrainConfig,
        vocab: Vocabulary,
        embeddings: Optional[Array] = None,
        exclusions: Optional[Set[ExclusionKey]] = None,
        progress: bool = False,
        log_path: Optional[Union[str, Path]] = None,
    ) -> None:
        self.config = config
        self.exclusions = exclusions or set()
        self.progress = progress
        self.log_path = Path(log_path) if log_path is not None else None
        init_seed, shuffle_seed, dropout_seed = np.random.SeedSequence(config.seed).spawn(3)
        self.shuffle_rng = np.random.default_rng(shuffle_seed)
        self.dropout_rng = np.random.default_rng(dropout_seed)
        self.model = EoGModel.initialize(config, vocab, np.random.default_rng(init_seed), embeddings)
        self.optimizer = AdamState(self.model.params.named(), learning_rate=config.learning_rate)
        self.history: List[EpochRecord] = []

    def evaluate(self, documents: Sequence[Document]) -> Metrics:
        """Scores the current model on ``documents``."""
        return score(self.model.predict_all(documents), self.config.no_relation, self.exclusions)

    def train_batch(self, batch: Sequence[Example], epoch: int, index: int) -> float:
        """Runs forward and backward over a batch of documents and applies one optimiser step.

        Returns:
            float: The batch loss, averaged over all pairs of the batch.

        Raises:
            DivergenceError: If the loss is not finite.
        """
        params = self.model.params
        params.zero_grad()
        tape = Tape()
        with using_tape(tape):
            probabilities = concat([self.model.forward(doc, pairs, train_mode=True, rng=self.dropout_rng) for doc, pairs in batch], axis=0)
            gold = [pair.label for _, pairs in batch for pair in pairs]
            loss = pair_loss(probabilities, gold, params.weight_matrices(), self.config.regularization)
        value = loss.item()
        if not math.isfinite(value):
            logger.error(f"Loss diverged to {value} at epoch {epoch}, batch {index}")
            raise DivergenceError(epoch, index, value)
        backward(loss, tape)
        params.fill_missing_grads()
        norm = clip_gradients(params.named().values(), self.config.gradient_clipping)
        adam_step(self.optimizer, params.named())
        logger.debug(f"Epoch {epoch} batch {index}: loss {value:.6f}, gradient norm {norm:.4f}")
        return value

    def epoch_batches(self, examples: Sequence[Example]) -> List[List[Example]]:
        """Shuffles the examples and cuts them into batches of ``batch_size`` documents."""
        order = self.shuffle_rng.permutation(len(examples))
        return [[examples[i] for i in order[start : start + self.config.batch_size]] for start in range(0, len(order), self.config.batch_size)]

    def train_epoch(self, examples: Sequence[Example], epoch: int) -> float:
        batches = self.epoch_batches(examples)
        losses = [
            self.train_batch(batch, epoch, index)
            for index, batch in enumerate(tqdm(batches, desc=f"epoch {epoch}", disable=not self.progress, leave=False), start=1)
        ]
        return float(np.mean(losses))

    def _record(self, record: EpochRecord) -> None:
        self.history.append(record)
        if self.log_path is not None:
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(record.model_dump_json() + "\n")

    def train(self, train_documents: Sequence[Document], dev_documents: Sequence[Document] = ()) -> Checkpoint:
        """Trains until early stopping, or for ``max_epochs`` epochs without dev documents.

        Args:
            train_documents (Sequence[Document]): Filtered training documents.
            dev_documents (Sequence[Document]): Filtered development documents; may be empty.

        Returns:
            Checkpoint: Parameters of the epoch with the best dev F1 (the last epoch without dev documents).

        Raises:
            DataError: If the training documents yield no candidate pair.
            DivergenceError: If the loss becomes non-finite.
        """
        examples = training_examples(self.config, train_documents, self.exclusions)
        if not examples:
            logger.error("No training document holds a candidate pair")
            raise DataError("no training document holds a candidate pair")

        best = Checkpoint.from_model(self.model, best_f1=-1.0, epoch=0)
        stale = 0
        for epoch in range(1, self.config.max_epochs + 1):
            started = time.perf_counter()
            train_loss = self.train_epoch(examples, epoch)
            dev = self.evaluate(dev_documents) if dev_documents else None
            record = EpochRecord(epoch=epoch, train_loss=train_loss, dev=dev, seconds=time.perf_counter() - started)
            self._record(record)

            if dev is None:
                best = Checkpoint.from_model(self.model, best_f1=0.0, epoch=epoch)
                logger.info(f"Epoch {epoch}: train loss {train_loss:.4f}")
                continue
            logger.info(f"Epoch {epoch}: train loss {train_loss:.4f}, dev P {dev.overall.precision:.4f} R {dev.overall.recall:.4f} F1 {dev.overall.f1:.4f}")
            if dev.overall.f1 > best.best_f1:
                best = Checkpoint.from_model(self.model, best_f1=dev.overall.f1, epoch=epoch)
                stale = 0
            else:
                stale += 1
                if stale >= self.config.early_stop_patience:
                    logger.info(f"No dev improvement for {stale} epochs, stopping after epoch {epoch}; best epoch {best.epoch}")
                    break
        return best
