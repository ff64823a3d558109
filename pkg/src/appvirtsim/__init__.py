"""appvirtsim: a deterministic simulator of Android-style app virtualization.

Container/plugin execution with UID sharing and two-layer API hooking, an
add-on customization pipeline, eighteen virtual-environment detection
probes plus a runtime hotness-counter detector, and a CLI that reproduces
the whole detect-versus-bypass matrix.
"""

__version__ = "0.1.0"

from .manifest import (  # noqa: F401
    AppManifest,
    Component,
    ServiceCatalog,
    parse_manifest,
    serialize_manifest,
)
from .simos import ApiCall, SimOs  # noqa: F401
from .customization import CustomizationResult, customize  # noqa: F401
from .probes import DetectionReport, run_matrix, run_probe  # noqa: F401
from .worlds import MatrixScenario, default_scenario  # noqa: F401
