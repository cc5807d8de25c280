"""Granular-ball random vector functional link networks.

Core entry points::

    from gbrvfl import ModelSpec, Variant, train, predict
"""

from .dataset import Dataset, NoiseSpec, SplitSpec, SynthSpec, load_csv, synthesize, train_test_split
from .granular import GBSet, GranularBall, generate
from .models import ModelSpec, TrainedModel, Variant, load, predict, save, train
from .randlayer import Activation, RandomLayer

__all__ = [
    "Activation", "Dataset", "GBSet", "GranularBall", "ModelSpec", "NoiseSpec", "RandomLayer",
    "SplitSpec", "SynthSpec", "TrainedModel", "Variant", "generate", "load", "load_csv", "predict",
    "save", "synthesize", "train", "train_test_split",
]
