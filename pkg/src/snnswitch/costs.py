"""Per-PE DTCM cost model for both compilation paradigms.

All sizes are bytes. Fractional byte counts from density-proportional
terms are rounded up.
"""

import math
from dataclasses import asdict, dataclass

from snnswitch.hardware import DEFAULT_HW

# 14 LIF parameters ("8+6"), one 32-bit word each.
LIF_N_PARAM = 14


@dataclass(frozen=True)
class MemoryBreakdown:
    input_spike_buffer: int = 0
    dma_buffer: int = 0
    master_population_table: int = 0
    address_list: int = 0
    synaptic_matrix: int = 0
    synaptic_input_buffer: int = 0
    reversed_order: int = 0
    input_merging_table: int = 0
    stacked_input: int = 0
    weight_delay_map: int = 0
    neuron_synapse_model: int = 0
    output_recording: int = 0
    stack_heap: int = 0
    hw_mgmt_os: int = 0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    @property
    def total(self):
        return sum(asdict(self).values())

    def to_dict(self):
        d = asdict(self)
        d["total"] = self.total
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        total = d.pop("total", None)
        out = cls(**d)
        if total is not None and total != out.total:
            raise ValueError("breakdown total does not match its parts")
        return out


def _ceil_bytes(x):
    # Table formulas multiply by float densities; drop sub-ppm float noise before ceiling.
    return int(math.ceil(round(x, 6)))


def serial_cost(
    n_neuron,
    n_source_vertex,
    n_address_list_rows,
    max_connected_rate,
    delay_range,
    n_projection_type=2,
    n_source_neuron=None,
    n_matrix_shares=1,
    hw=DEFAULT_HW,
):
    """Serial-paradigm PE footprint.

    ``n_source_neuron`` defaults to ``n_neuron``, which gives the square
    synaptic-matrix term; pass the source slice size for rectangular
    slices. ``n_matrix_shares`` spreads the synaptic matrix evenly over
    that many PEs; this function returns one share's PE.
    """
    if n_source_neuron is None:
        n_source_neuron = n_neuron
    if not 0.0 <= max_connected_rate <= 1.0:
        raise ValueError("max_connected_rate must be in [0, 1]")
    matrix = (32 / 8) * n_neuron * n_source_neuron * max_connected_rate / n_matrix_shares
    return MemoryBreakdown(
        input_spike_buffer=4 * n_neuron,
        dma_buffer=0,
        master_population_table=12 * n_source_vertex,
        address_list=4 * n_address_list_rows,
        synaptic_matrix=_ceil_bytes(matrix),
        synaptic_input_buffer=2 * n_neuron * delay_range * n_projection_type,
        neuron_synapse_model=4 * LIF_N_PARAM,
        output_recording=4 * (-(-n_neuron // 32) + 1) + 4 * n_neuron * 3,
        stack_heap=12 * n_source_vertex,
        hw_mgmt_os=hw.hw_mgmt_bytes,
    )


def dominant_cost(
    n_source,
    delay_range,
    n_target,
    n_source_vertex=1,
    literal_neuron_model=False,
    max_connected_rate=0.0,
    hw=DEFAULT_HW,
):
    """Dominant (spike pre-processing) PE footprint of the parallel paradigm.

    With ``literal_neuron_model`` the neuron/synapse row uses the
    matrix-sized formula instead of the 14-parameter LIF record.
    """
    if literal_neuron_model:
        model = _ceil_bytes(4 * n_source * n_target * max_connected_rate)
    else:
        model = 4 * LIF_N_PARAM
    entries = n_source * delay_range
    return MemoryBreakdown(
        input_spike_buffer=4 * n_source,
        reversed_order=2 * entries,
        input_merging_table=3 * entries,
        stacked_input=4 * entries,
        neuron_synapse_model=model,
        output_recording=4 * n_target * 4,
        stack_heap=12 * n_source_vertex,
        hw_mgmt_os=hw.hw_mgmt_bytes,
    )


def subordinate_cost(
    map_bytes, n_neuron, delay_range, n_projection_type=2, n_source_vertex=1, hw=DEFAULT_HW
):
    """Subordinate (MAC) PE footprint holding ``map_bytes`` of weight tile."""
    return MemoryBreakdown(
        weight_delay_map=map_bytes,
        output_recording=2 * n_neuron * delay_range * n_projection_type,
        stack_heap=12 * n_source_vertex,
        hw_mgmt_os=hw.hw_mgmt_bytes,
    )


def subordinate_overhead(n_neuron, delay_range, n_projection_type=2, n_source_vertex=1, hw=DEFAULT_HW):
    return subordinate_cost(0, n_neuron, delay_range, n_projection_type, n_source_vertex, hw).total
