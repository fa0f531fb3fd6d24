"""Sumset inequalities and Bohr-set recovery on finite grid groups Z/N1 x ... x Z/Nd."""

from __future__ import annotations

__version__ = "0.1.0"

from .conv import ConvolutionProfile, convolve, iterated_sumset, partial_sumset, sumset
from .critical import (
    CriticalityReport,
    NotCriticalError,
    almost_sumset,
    approximate_by_translates,
    criticality,
    find_shift_with_intersection,
    shrink_to_small,
)
from .group import (
    Arc,
    BohrDescription,
    Character,
    EmptySetError,
    GridGroup,
    GroupMismatchError,
    GroupSet,
    bohr,
    bohr_set,
    make_group,
)
from .inequalities import (
    BoundReport,
    ConnectednessWarning,
    EqualityCase,
    check_kneser,
    check_partial_bound,
    classify_equality,
    ruzsa_functional,
    submodularity_defect,
)
from .inverse import (
    ArcFit,
    DensityFunction,
    QuotientError,
    RecoveryConfig,
    RecoveryError,
    RecoveryResult,
    detect_character,
    estimate_multiplicity,
    estimate_sup,
    fit_arc,
    pushforward,
    quotient_character,
    recover_bohr_pair,
    spectrum,
    transfer_structure,
)
