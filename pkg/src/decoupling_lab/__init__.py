"""Numerical laboratory for decoupled infima, semicontinuity certificates,
Ekeland-based penalized searches, fuzzy multiplier rules, and desk-scale
sparse optimal control."""

from .errors import *  # noqa: F401,F403
from .extreal import ExtReal, MINUS_INF, PLUS_INF, ext_inf, ext_sup_nonneg  # noqa: F401
from .geometry import EIFamily, Region, cheb, cheb_pair, ei_family_for  # noqa: F401
from .oracles import FnOracle, SetOracle, constant_fn, from_scalar, indicator  # noqa: F401
from .sampling import FlatSet, ProductGrid, SampleScheme, sample_region  # noqa: F401
from .verdicts import FAILS, HOLDS, INCONCLUSIVE, Verdict  # noqa: F401
from .decoupling import (  # noqa: F401
    DecouplingReport,
    firm_gap,
    firm_gap_quasi,
    full_report,
    plain_inf,
    quasiuniform_inf,
    recoupling_cost,
    uniform_inf_around,
    uniform_inf_on,
)
