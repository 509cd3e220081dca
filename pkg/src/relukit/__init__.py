"""relukit: explicit construction and verification of ReLU networks."""

from .scalars import F64, RATIONAL, ScalarKind
from .nets import (
    Network,
    SizeReport,
    affine_net,
    compose,
    depth_align,
    evaluate,
    identity_net,
    parallelize,
    parallelize_many,
    scaling_chain,
    serialize,
    deserialize,
    size_report,
)

__all__ = [
    "F64",
    "RATIONAL",
    "ScalarKind",
    "Network",
    "SizeReport",
    "affine_net",
    "compose",
    "depth_align",
    "evaluate",
    "identity_net",
    "parallelize",
    "parallelize_many",
    "scaling_chain",
    "serialize",
    "deserialize",
    "size_report",
]
