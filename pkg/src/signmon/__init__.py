"""Runtime monitor for certified shunting-sign detections.

A certificate pairs an image with a claimed class and a bounding box.  The
monitor crops and binarizes the box, traces contours, and accepts the claim
only when some pair of contours satisfies the class's geometric rules.
"""

from .kernels import BACKEND
from .monitor import (
    Certificate,
    MonitorVerdict,
    batch_check,
    check_certificate,
    make_certificate,
    parse_certificate,
)
from .ontology import SignClass, ToleranceConfig, check_membership

__all__ = [
    "BACKEND",
    "Certificate",
    "MonitorVerdict",
    "SignClass",
    "ToleranceConfig",
    "batch_check",
    "check_certificate",
    "check_membership",
    "make_certificate",
    "parse_certificate",
]
__version__ = "0.1.0"
