"""Cooperation, redundancy, and synergy among attention heads.

Discretized head outputs become per-head symbols; coalitions of heads get
joint-entropy energies; Moebius inversion turns energies into Harsanyi
dividends; Shapley-style scores rank heads; the lowest-ranked heads are
pruned, with an exact Gibbs-equilibrium audit of the free-energy cost.
"""

from .entropy import (
    Coalition,
    EnergyTable,
    build_energy_table,
    coalition,
    empirical_distribution,
    energy_table_from_values,
    joint_entropy,
)
from .errors import (
    ConventionError,
    FormatError,
    GuardError,
    InputError,
    IntegrityError,
    ToolkitError,
)
from .gibbs import (
    GibbsModel,
    collective_free_energy,
    gibbs_distribution,
    gibbs_optimality_audit,
    pruning_delta_audit,
    restrict_energy_table,
)
from .harsanyi import (
    DividendTable,
    SignConvention,
    mobius_dividends,
    reconstruct_energy,
)
from .pruning import (
    FlopReport,
    ModelGeometry,
    PruneMask,
    flop_estimate,
    load_mask,
    random_mask,
    select_heads,
    write_mask,
)
from .shapley import (
    ScoreTable,
    full_shapley,
    permutation_shapley_oracle,
    truncated_shapley,
)
from .trace_store import (
    GeneratorSpec,
    HeadId,
    TraceHeader,
    TraceSet,
    load_traces,
    synth_traces,
    write_traces,
)

__version__ = "0.1.0"
