"""Checkpoint-to-archive converter for wav2vec 2.0 feature encoders."""

from w2vfe_exporter.export import MissingKey, ShapeSurprise, export_fe
from w2vfe_exporter.mapping import TensorNameMap, detect_layout

__version__ = "0.1.0"
