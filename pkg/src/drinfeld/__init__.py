"""Drinfeld modular forms of arbitrary rank at explicit points.

Exact, precision-tracked arithmetic in finite extensions of
F_q((1/theta)); lattice sums for Eisenstein series and their
derivatives; coefficient forms, the h-function, quasi-periods and the
period matrix; and identity suites that check each relation through two
independent computations.
"""

from __future__ import annotations

from . import kernels
from .drinfeld import DrinfeldData
from .forms import FormExpr, Forms, GammaMatrix, forms_of, gamma_sample, parse_form
from .lattice import LatticeSums, OmegaPoint, SumParams
from .localfield import FieldDesc, FieldError, LFElem, PrecisionError, lf_carlitz_period, lf_parse, lf_root
from .tate import Omega, PoleSum, TSeries
from .verify import CheckReport, PointSpec, Session, VerifyConfig, recognize_algebraic, run_suites

__version__ = "0.1.0"

__all__ = [
    "kernels", "DrinfeldData", "FormExpr", "Forms", "GammaMatrix", "forms_of", "gamma_sample",
    "parse_form", "LatticeSums", "OmegaPoint", "SumParams", "FieldDesc", "FieldError", "LFElem",
    "PrecisionError", "lf_carlitz_period", "lf_parse", "lf_root", "Omega", "PoleSum", "TSeries",
    "CheckReport", "PointSpec", "Session", "VerifyConfig", "recognize_algebraic", "run_suites",
]
