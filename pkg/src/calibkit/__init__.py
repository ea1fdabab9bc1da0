"""Numerical toolkit for constant-coefficient calibrations and the conformal curves they define.

Modules
-------
exterior   sparse covectors, wedge, Hodge star, pullback, frame evaluation
catalog    named calibrations and building operations
comass     certified comass estimation by Stiefel ascent
curves     conformal curves, constructors, conformality reports
analysis   isoperimetric, subharmonicity, maximum principle, Hadamard checks
decomp     face normalization, splitting, 2-covector normal form
cli        batch command-line front end
"""

from .catalog import resolve_form, standard_catalog
from .comass import ComassEstimate, comass_ascent, is_calibration
from .curves import CurveSpec, builtin_curve, conformality_report
from .decomp import decompose, perturb_family, split, symp_normal_form
from .exterior import Covector, eval_frame, hodge_star, pullback, wedge
from .grids import GridSpec

__version__ = "0.1.0"

__all__ = [
    "ComassEstimate",
    "Covector",
    "CurveSpec",
    "GridSpec",
    "builtin_curve",
    "comass_ascent",
    "conformality_report",
    "decompose",
    "eval_frame",
    "hodge_star",
    "is_calibration",
    "perturb_family",
    "pullback",
    "resolve_form",
    "split",
    "standard_catalog",
    "symp_normal_form",
    "wedge",
]
