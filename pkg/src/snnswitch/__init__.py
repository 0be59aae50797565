"""Serial/parallel paradigm-switching mapping compiler for spiking networks."""

from snnswitch.errors import (
    BundleError,
    ConfigError,
    EquivalenceError,
    MappingError,
    ModelFormatError,
    SimulationError,
)
from snnswitch.hardware import HardwareConstants
from snnswitch.model import (
    FeatureVector,
    LayerSpec,
    NetworkSpec,
    NeuronParams,
    SynapseTable,
    build_application_graph,
    gesture_network,
    layer_features,
    realize_synapses,
)

__version__ = "0.1.0"

__all__ = [
    "BundleError",
    "ConfigError",
    "EquivalenceError",
    "FeatureVector",
    "HardwareConstants",
    "LayerSpec",
    "MappingError",
    "ModelFormatError",
    "NetworkSpec",
    "NeuronParams",
    "SimulationError",
    "SynapseTable",
    "build_application_graph",
    "gesture_network",
    "layer_features",
    "realize_synapses",
]
