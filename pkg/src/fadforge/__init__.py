"""Phase-field fracture simulations and failure assessment diagrams."""

from .fad import AssessmentPoint, FailureAssessmentLine, safety_factor
from .material import HydrogenParams, MaterialParams

__version__ = "0.1.0"

__all__ = ["AssessmentPoint", "FailureAssessmentLine", "HydrogenParams", "MaterialParams",
           "safety_factor", "__version__"]
