#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""constants.py: Constants shared by the corpus, graph and training layers.

This module defines special vocabulary tokens, node kinds, edge family names, the distance bucketing, dataset presets and the checkpoint format tag.
"""
UNGROUNDED_KB_ID = "-1"

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

NODE_KINDS = ("M", "E", "S")
EDGE_FAMILIES = ("MM", "MS", "ME", "SS", "ES", "EE")

# Upper bounds (inclusive) of the distance buckets 0, 1, 2, 3-4, 5-7, 8-15, 16-31; anything larger falls into the last bucket.
DISTANCE_BUCKET_BOUNDS = (0, 1, 2, 4, 7, 15, 31)
DISTANCE_BUCKETS = len(DISTANCE_BUCKET_BOUNDS) + 1

VARIANTS = ("EoG", "Full", "NoInf", "Sent")
# Inference iterations used when the configuration leaves them unset; 2**N gives the target edge length.
DEFAULT_ITERATIONS = {"EoG": 3, "Full": 1, "NoInf": 0, "Sent": 2}

DATASET_PRESETS = {
    "CDR": {"head_type": "Chemical", "tail_type": "Disease", "relation_types": ["CID"], "batch_size": 2},
    "GDA": {"head_type": "Gene", "tail_type": "Disease", "relation_types": ["GDA"], "batch_size": 3},
}

CHECKPOINT_FORMAT = "eog-checkpoint"
CHECKPOINT_VERSION = 1
