"""Label-bit capacity analysis for teacher networks and subclass knowledge
distillation on small numpy networks."""
from .capacity import (
    CapacityResult,
    blahut_arimoto,
    capacity_bac,
    capacity_qary_symmetric,
    capacity_symmetric,
    capacity_z,
    closed_form_capacity,
    k_factor,
)
from .entropy_channel import (
    ChannelError,
    ChannelKind,
    ChannelMatrix,
    ChannelTag,
    binary_entropy,
    classify_channel,
    entropy,
    make_bac,
    make_bsc,
    make_qary_symmetric,
    make_z,
    mutual_information,
)
from .labelbits import (
    ClassHierarchy,
    LabelBitsReport,
    PatternMismatchError,
    TeacherAccuracy,
    analyze_confusion,
    label_bits_balanced,
    label_bits_binary_detection,
    label_bits_general,
    skd_information_gain,
)
from .synthdata import SyntheticDataset, SyntheticSpec, benchmark_spec, degenerate_spec, generate

__version__ = "0.1.0"
