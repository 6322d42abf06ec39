"""Relational reasoning network for 3-D craniomaxillofacial landmarks."""

from ._rrn import (
    Model,
    RrnError,
    generate_dataset,
    landmark_names,
    load_dataset,
    pairwise_table,
    preset_names,
    relation_unit_count,
    run_preset,
    synthetic,
    to_spherical,
)

__all__ = [
    "Model",
    "RrnError",
    "generate_dataset",
    "landmark_names",
    "load_dataset",
    "pairwise_table",
    "preset_names",
    "relation_unit_count",
    "run_preset",
    "synthetic",
    "to_spherical",
]
