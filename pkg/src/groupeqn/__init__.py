"""Toolkit for equations over finite solvable groups.

Builds finite groups from permutation generators, computes commutator and
Fitting structure, constructs inducer/definer expressions and G-programs,
compiles graph C-coloring instances into group equations, and verifies
everything against brute-force oracles at desk scale.
"""

__version__ = "0.1.0"

from .expr import (  # noqa: F401
    Expression,
    ImageSet,
    build_commutator_fixed_inducer,
    build_fitting_definer,
    build_gamma_inducer,
    build_lower_fitting_inducer,
    build_power_inducer,
    build_upper_fitting_definer,
    evaluate,
    image_exact,
    image_read_once,
    substitute,
)
from .gprogram import (  # noqa: F401
    ChainSpec,
    GProgram,
    build_and_program,
    derive_chain,
    eval_program,
    fitting_chain,
    progsat_bruteforce,
)
from .group import (  # noqa: F401
    ElementSet,
    Group,
    Quotient,
    Subgroup,
    close_generators,
    conjugacy_class,
    eta,
    fitting_length,
    fitting_subgroup,
    load_group_file,
    lower_central_series,
    lower_fitting_series,
    power_subgroup,
    quotient_group,
    set_commutator,
    stabilization_constant,
    subgroup_generated,
    upper_fitting_series,
)
from .perm import Permutation, parse_permutation  # noqa: F401
from .reduction import (  # noqa: F401
    CompiledInstance,
    GraphInstance,
    KHCertificate,
    compile_coloring,
    decide_compiled,
    find_kh,
    load_graph,
    preprocess_theorem_main2,
)
from .solver import (  # noqa: F401
    SolveBudget,
    check_function,
    color_bruteforce,
    eqnid_bruteforce,
    eqnsat_bruteforce,
)
