#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""vocabulary.py: Token vocabulary and pretrained embedding loading.

Tokens are lowercased for lookup only; surfaces in documents keep their case. Index 0 is the padding token and index 1 the unknown token.

Examples:
    Build a vocabulary and load PubMed embeddings::

        import numpy as np
        from sparta.eog.corpus.vocabulary import Vocabulary, load_embeddings

        vocab = Vocabulary.build(train_documents)
        table, coverage = load_embeddings("PubMed-shuffle-win-30.txt", vocab, 200, np.random.default_rng(0))
        print(f"{coverage:.1%} of the vocabulary found")
"""
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from sparta.eog.errors import EmbeddingFormatError
from sparta.eog.models.constants import PAD_TOKEN, UNK_TOKEN
from sparta.eog.models.model import Document

logger = logging.getLogger(__name__)


class Vocabulary:
    """Dense token-to-index map with optional padding and unknown entries."""

    def __init__(self, tokens: Iterable[str] = (), specials: bool = True, lowercase: bool = True) -> None:
        self.lowercase = lowercase
        self.specials = specials
        self.itos: List[str] = [PAD_TOKEN, UNK_TOKEN] if specials else []
        self.stoi: Dict[str, int] = {token: i for i, token in enumerate(self.itos)}
        for token in tokens:
            self.add(token)

    @classmethod
    def build(cls, documents: Iterable[Document], min_freq: int = 1, lowercase: bool = True) -> "Vocabulary":
        """Collects the tokens of ``documents`` seen at least ``min_freq`` times, most frequent first."""
        counts: Counter = Counter()
        for doc in documents:
            for sentence in doc.sentences:
                counts.update(token.lower() if lowercase else token for token in sentence.tokens)
        ranked = sorted((token for token, n in counts.items() if n >= min_freq), key=lambda token: (-counts[token], token))
        vocab = cls(ranked, specials=True, lowercase=lowercase)
        logger.info(f"Vocabulary of {len(vocab)} entries from {sum(counts.values())} tokens")
        return vocab

    def normalize(self, token: str) -> str:
        return token.lower() if self.lowercase else token

    def add(self, token: str) -> int:
        token = self.normalize(token)
        if token not in self.stoi:
            self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return self.stoi[token]

    @property
    def pad_index(self) -> int:
        return self.stoi[PAD_TOKEN]

    @property
    def unk_index(self) -> int:
        return self.stoi[UNK_TOKEN]

    @property
    def regular_tokens(self) -> List[str]:
        return self.itos[2:] if self.specials else list(self.itos)

    def index(self, token: str) -> int:
        """Index of ``token``; unknown tokens map to the unknown entry.

        Raises:
            KeyError: For an unknown token when the vocabulary has no special entries.
        """
        normalized = self.normalize(token)
        if normalized in self.stoi:
            return self.stoi[normalized]
        if not self.specials:
            raise KeyError(token)
        return self.unk_index

    def encode(self, tokens: Sequence[str]) -> List[int]:
        return [self.index(token) for token in tokens]

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: object) -> bool:
        return isinstance(token, str) and self.normalize(token) in self.stoi

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(self.itos) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path], lowercase: bool = True) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            tokens = [line.rstrip("\n") for line in f if line.rstrip("\n")]
        specials = tokens[:2] == [PAD_TOKEN, UNK_TOKEN]
        vocab = cls(specials=specials, lowercase=lowercase)
        for token in tokens[2:] if specials else tokens:
            vocab.itos.append(token)
            vocab.stoi[token] = len(vocab.itos) - 1
        return vocab


def random_embeddings(vocab: Vocabulary, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform [-0.05, 0.05] table with a zero padding row."""
    table = rng.uniform(-0.05, 0.05, size=(len(vocab), dim))
    if vocab.specials:
        table[vocab.pad_index] = 0.0
    return table


def load_embeddings(path: Union[str, Path], vocab: Vocabulary, dim: int, rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, float]:
    """Reads a text embedding file into a table aligned with ``vocab``.

    The file holds one token per line followed by ``dim`` reals, optionally preceded by a ``count dim`` header. Rows of tokens missing from the file keep
    their random initialisation.

    Args:
        path (Union[str, Path]): Embedding file.
        vocab (Vocabulary): Target vocabulary.
        dim (int): Expected vector dimension.
        rng (Optional[np.random.Generator]): Generator for the rows of tokens missing from the file.

    Returns:
        Tuple[np.ndarray, float]: The (len(vocab), dim) table and the share of regular vocabulary tokens found in the file.

    Raises:
        EmbeddingFormatError: If a line carries a vector of another dimension.
    """
    table = random_embeddings(vocab, dim, rng if rng is not None else np.random.default_rng(0))
    found: Set[int] = set()
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if number == 1 and len(fields) == 2 and fields[0].isdigit() and fields[1].isdigit():
                if int(fields[1]) != dim:
                    raise EmbeddingFormatError(number, f"header announces dimension {fields[1]}, expected {dim}")
                continue
            if len(fields) - 1 != dim:
                logger.error(f"Embedding line {number} of {path} has {len(fields) - 1} values, expected {dim}")
                raise EmbeddingFormatError(number, f"expected {dim} values, found {len(fields) - 1}")
            token = fields[0]
            index = vocab.stoi.get(token, vocab.stoi.get(vocab.normalize(token)))
            if index is None or index in found or (vocab.specials and index < 2):
                continue
            try:
                table[index] = [float(value) for value in fields[1:]]
            except ValueError:
                raise EmbeddingFormatError(number, "non-numeric value") from None
            found.add(index)

    regular = len(vocab.regular_tokens)
    coverage = len(found) / regular if regular else 0.0
    logger.info(f"Loaded embeddings for {len(found)} of {regular} tokens ({coverage:.1%}) from {path}")
    return table, coverage
