from .codec import SUPPORTED_SUBVECTORS, DatasetMeta, EncodedDataset, EncodedVector
from .eval import BenchResult, MetricsReport, QueryResult
from .nonlinearity import Interval, NonlinearityFamily, NonlinearityParams
from .optimizer import FitResult, SnesHyperparams, SnesState
from .quantizer import SUPPORTED_BITS, CodeBlock, QuantizerConfig
from .run import Command, RunConfig

__all__ = [
    "NonlinearityFamily",
    "NonlinearityParams",
    "Interval",
    "QuantizerConfig",
    "CodeBlock",
    "SUPPORTED_BITS",
    "SnesState",
    "SnesHyperparams",
    "FitResult",
    "DatasetMeta",
    "EncodedVector",
    "EncodedDataset",
    "SUPPORTED_SUBVECTORS",
    "QueryResult",
    "MetricsReport",
    "BenchResult",
    "Command",
    "RunConfig",
]
