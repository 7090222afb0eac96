"""Gov2Vec: joint word/source embeddings with ensemble similarity queries."""

from . import analysis, corpus, hsm, hyperopt, query, synth, trainer
from .errors import Gov2VecError

__all__ = [
    "analysis",
    "corpus",
    "hsm",
    "hyperopt",
    "query",
    "synth",
    "trainer",
    "Gov2VecError",
]

__version__ = "0.1.0"
