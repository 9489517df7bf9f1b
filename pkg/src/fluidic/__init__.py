"""Chemical-reaction microfluidic logic circuits: simulation, gate library,
truth-table verification, and boolean synthesis."""

from .errors import (
    DesignRuleError,
    FluidicError,
    ParseError,
    StabilityError,
    SynthesisError,
    ValidationError,
)
from .kinetics import (
    WASTE_SPECIES,
    Reaction,
    ReactionKind,
    SignalProfile,
    Species,
    SpeciesTable,
    annihilation_step,
    catalytic_step,
    eval_profile,
)
from .network import (
    Annotations,
    Channel,
    FlowMap,
    Inlet,
    Junction,
    JunctionKind,
    Netlist,
    Probe,
    StageInfo,
    Violation,
    assign_flows,
    junction_mix,
    validate,
)
from .netio import (
    SCHEMA,
    dump_netlist,
    dumps_netlist,
    load_netlist,
    loads_netlist,
)
from .transport import (
    ChannelState,
    DispersionModel,
    NetworkSimulation,
    SolverConfig,
    Splitting,
    Trace,
    effective_dispersion,
    simulate,
    transport_step,
)
from .gates import (
    GateKind,
    GateParams,
    build_addition,
    build_amplification,
    build_gate,
    build_subtraction,
    gate_truth,
)
from .harness import (
    BitSchedule,
    LevelPrediction,
    TruthTableReport,
    WindowReport,
    default_bit_schedule,
    default_threshold,
    design_window,
    latency,
    predict_levels,
    read_bits,
)
from .synthesis import (
    CircuitMetrics,
    TruthTable,
    map_to_netlist,
    metrics,
    minimize,
    table_of,
)

__version__ = "0.1.0"
