"""Python bindings for the neuroevo engine."""

import json

from ._core import (
    FORMAT_VERSION,
    ConfigError,
    DecodeError,
    Error,
    EvaluationError,
    IoError,
    ParseError,
    ShapeError,
    StructureError,
    UnsupportedVersionError,
    UsageError,
    activate,
    canonical_genome,
    canonical_history,
    classify,
    convolve,
    distance,
    load_image,
    minimal_genome,
    pool,
)
from . import _core


def train(task="xor", config=None, workers=1, on_generation=None):
    """Evolve a population; `config` may be a dict or JSON text.

    Returns (champion, history, target_reached) with the documents decoded.
    """
    if isinstance(config, dict):
        config = json.dumps(config)
    result = _core.train(task, config or "", workers, on_generation)
    return json.loads(result["champion"]), json.loads(result["history"]), result["target_reached"]


def default_config():
    return json.loads(_core.default_config())


def schemas():
    return {
        "genome": json.loads(_core.genome_schema()),
        "history": json.loads(_core.history_schema()),
    }
