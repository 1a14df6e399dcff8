"""Concurrent game structures with shared propositional control.

Model checking ATL* under memoryless strategies, the reduction of shared
control to exclusive control, and encoders for three families of iterated
games.
"""

from cgspc.errors import (
    CgsError,
    FormulaSyntaxError,
    InputError,
    PreconditionError,
    ResourceError,
    TotalityError,
)
from cgspc.formulas import parse, render, translate_tr
from cgspc.structures import GameStructure, LassoPath, StrategyProfile, validate
from cgspc.checker import ModelChecker, check_state, ewin
from cgspc.reduction import build_epc, verify_theorem

__version__ = "0.1.0"

__all__ = [
    "CgsError", "FormulaSyntaxError", "InputError", "PreconditionError", "ResourceError",
    "TotalityError", "GameStructure", "LassoPath", "ModelChecker", "StrategyProfile",
    "build_epc", "check_state", "ewin", "parse", "render", "translate_tr", "validate",
    "verify_theorem",
]
