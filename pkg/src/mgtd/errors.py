"""Exception types raised across the toolkit."""


class ToolkitError(Exception):
    """Base class for all mgtd errors."""


# corpus
class MalformedRow(ToolkitError):
    pass


class UnknownLabelValue(ToolkitError):
    pass


class TooFewDocuments(ToolkitError):
    pass


class EmptyCorpus(ToolkitError):
    pass


# readability
class ZeroWords(ToolkitError):
    pass


class ZeroSentences(ToolkitError):
    pass


# lexicons
class MalformedLine(ToolkitError):
    pass


class ConflictingDuplicate(ToolkitError):
    pass


class MissingCategory(ToolkitError):
    pass


# vectorizer / models
class EmptyTrainingSet(ToolkitError):
    pass


class SingleClassTraining(ToolkitError):
    pass


class DimensionMismatch(ToolkitError):
    pass


class NegativeFeature(ToolkitError):
    pass


class MixedDimensions(ToolkitError):
    pass


class EmptyEnsemble(ToolkitError):
    pass


class VersionMismatch(ToolkitError):
    pass


class ChecksumMismatch(ToolkitError):
    pass


# evaluation
class LengthMismatch(ToolkitError):
    pass


class EmptyMatrix(ToolkitError):
    pass


class TooFewSamples(ToolkitError):
    pass


class SingleClassCorpus(ToolkitError):
    pass


# rephrase
class EmptyText(ToolkitError):
    pass


class MissingPlaceholder(ToolkitError):
    pass


class EndpointUnreachable(ToolkitError):
    pass


class AuthFailure(ToolkitError):
    pass


class RateLimited(ToolkitError):
    pass


# assets
class MissingAsset(ToolkitError):
    pass


class CategoryCountMismatch(ToolkitError):
    pass


class DownloadFailed(ToolkitError):
    pass
