"""Exception types shared across the package."""


class Gov2VecError(Exception):
    """Base class for all gov2vec errors."""


class EmptyVocabulary(Gov2VecError):
    """No word survived the frequency cutoff."""


class EmptyCorpus(Gov2VecError):
    """Training was asked to run on an empty corpus."""


class UnknownWord(Gov2VecError):
    """A word is not present in the model vocabulary."""


class UnknownIdentifier(Gov2VecError):
    """A query term (word or source) could not be resolved."""


class ZeroVector(Gov2VecError):
    """Cosine similarity is undefined for a zero vector."""


class DegenerateQuery(Gov2VecError):
    """The signed query terms cancelled out to a zero vector."""


class DegenerateData(Gov2VecError):
    """PCA input has zero variance."""


class ConstantSeries(Gov2VecError):
    """Spearman correlation is undefined when a series has no rank variance."""
