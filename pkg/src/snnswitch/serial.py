"""Event-driven serial paradigm: partitioning, PE images and cost accounting.

Each PE owns one target slice and one source sub-range. A spike key hits
the master population table (MPT), whose entry selects a run of the
address list; the address-list word for the source neuron gives the offset
and length of its block of 32-bit row words in the synaptic matrix.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from snnswitch.costs import MemoryBreakdown, serial_cost
from snnswitch.errors import MappingError
from snnswitch.hardware import DEFAULT_HW
from snnswitch.model import LayerSpec, SynapseTable, realize_synapses

MAX_MATRIX_SHARES = 4

# Row word layout (LSB first): 9-bit target index, 4-bit delay-1, 1-bit type, 8-bit weight.
TARGET_BITS = 9
DELAY_SHIFT = 9
DELAY_BITS = 4
TYPE_SHIFT = 13
WEIGHT_SHIFT = 14

# Address-list word: 20-bit block offset (in words), 12-bit row length.
OFFSET_BITS = 20
LENGTH_SHIFT = 20


def equal_slices(n, cap):
    """Split ``range(n)`` into ``ceil(n / cap)`` contiguous near-equal slices."""
    m = -(-n // cap)
    base, extra = divmod(n, m)
    out, lo = [], 0
    for i in range(m):
        hi = lo + base + (1 if i < extra else 0)
        out.append((lo, hi))
        lo = hi
    return out


def split_range(lo, hi, k):
    n = hi - lo
    base, extra = divmod(n, k)
    out = []
    for i in range(k):
        step = base + (1 if i < extra else 0)
        out.append((lo, lo + step))
        lo += step
    return out


@dataclass(frozen=True)
class SerialSlot:
    """One planned PE: a target slice, its source sub-range and matrix share."""

    target_slice: tuple
    source_slice: tuple
    share: int
    n_shares: int
    breakdown: MemoryBreakdown


def _slot_cost(spec, n_tgt, n_src, k, hw):
    return serial_cost(
        n_neuron=n_tgt,
        n_source_vertex=1,
        n_address_list_rows=1,
        max_connected_rate=spec.weight_density,
        delay_range=spec.delay_range,
        n_projection_type=spec.n_projection_type,
        n_source_neuron=n_src,
        n_matrix_shares=k,
        hw=hw,
    )


def _fit_target_slice(spec, tgt, src, hw):
    n_tgt, n_src = tgt[1] - tgt[0], src[1] - src[0]
    for k in range(1, MAX_MATRIX_SHARES + 1):
        if k > n_src:
            break
        cost = _slot_cost(spec, n_tgt, n_src, k, hw)
        if cost.total <= hw.dtcm_bytes:
            return [
                SerialSlot(tgt, sub, i, k, cost)
                for i, sub in enumerate(split_range(src[0], src[1], k))
            ]
    if n_tgt == 1:
        raise MappingError(
            f"unmappable layer: a single target neuron with {n_src} sources "
            f"does not fit {hw.dtcm_bytes} B even over {MAX_MATRIX_SHARES} PEs"
        )
    mid = tgt[0] + -(-n_tgt // 2)
    return _fit_target_slice(spec, (tgt[0], mid), src, hw) + _fit_target_slice(
        spec, (mid, tgt[1]), src, hw
    )


def _plan_with_target_slices(layer, m, sources, hw):
    slots = []
    for tgt in split_range(0, layer.n_target, m):
        for src in sources:
            slots.extend(_fit_target_slice(layer, tgt, src, hw))
    return slots


def partition_serial(layer: LayerSpec, hw=DEFAULT_HW):
    """Plan the serial PEs of ``layer`` from the cost model alone.

    Targets and sources are each cut into near-equal slices of at most
    ``serial_neuron_cap`` neurons. A (target, source) slice pair that
    overflows DTCM spreads its synaptic matrix over 2-4 PEs; if four is
    still too few the target slice is halved and retried.

    The number of target slices starts at ``ceil(n_target / cap)`` and
    grows while a finer equal split could still save PEs; the smallest
    total wins (ties keep fewer slices). This keeps the count
    nondecreasing in ``n_target``.
    """
    cap = hw.serial_neuron_cap
    sources = equal_slices(layer.n_source, cap)
    m = -(-layer.n_target // cap)
    best = _plan_with_target_slices(layer, m, sources, hw)
    # Every (target slice, source slice) pair costs at least one PE.
    while m < layer.n_target and (m + 1) * len(sources) < len(best):
        m += 1
        candidate = _plan_with_target_slices(layer, m, sources, hw)
        if len(candidate) < len(best):
            best = candidate
    return best


def serial_pe_count(layer: LayerSpec, hw=DEFAULT_HW) -> int:
    return len(partition_serial(layer, hw))


@dataclass(frozen=True, eq=False)
class SerialPEImage:
    target_slice: tuple
    source_slice: tuple
    share: int
    n_shares: int
    source_vertex: int
    mpt: np.ndarray
    address_list: np.ndarray
    synaptic_matrix: np.ndarray
    breakdown: MemoryBreakdown

    @property
    def payload_bytes(self):
        """Concrete bytes of the three loaded tables."""
        return 4 * (self.mpt.size + self.address_list.size + self.synaptic_matrix.size)

    def mpt_entries(self):
        out = []
        for w0, lo, hi in self.mpt.tolist():
            out.append((w0 & 0xFFFF, (lo, hi), w0 >> 16))
        return out

    def lookup(self, source_vertex, key):
        """Return the decoded block rows for spike ``key``; KeyError on a miss."""
        for vertex, (lo, hi), base in self.mpt_entries():
            if vertex == source_vertex and lo <= key < hi:
                word = int(self.address_list[base + key - lo])
                offset = word & ((1 << OFFSET_BITS) - 1)
                length = word >> LENGTH_SHIFT
                return self.synaptic_matrix[offset : offset + length]
        raise KeyError((source_vertex, key))

    def blocks(self):
        """Yield ``(source, rows)`` for every connected source neuron."""
        for vertex, (lo, hi), base in self.mpt_entries():
            for key in range(lo, hi):
                rows = self.lookup(vertex, key)
                if len(rows):
                    yield key, rows


@dataclass(frozen=True)
class SerialCompilation:
    pe_images: tuple
    n_source: int
    n_target: int
    delay_range: int

    @property
    def pe_count(self):
        return len(self.pe_images)

    @property
    def bytes_total(self):
        return sum(img.breakdown.total for img in self.pe_images)


def pack_rows(local_targets, delays, weights):
    """Pack synapses into 32-bit row words."""
    local_targets = np.asarray(local_targets, dtype=np.int64)
    delays = np.asarray(delays, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.int64)
    if len(local_targets) and local_targets.max() >= 1 << TARGET_BITS:
        raise MappingError("target index exceeds the 9-bit row field")
    if len(delays) and (delays.min() < 1 or delays.max() > 1 << DELAY_BITS):
        raise MappingError("delay exceeds the 4-bit row field (max 16)")
    types = (weights < 0).astype(np.int64)
    words = (
        local_targets
        | ((delays - 1) << DELAY_SHIFT)
        | (types << TYPE_SHIFT)
        | ((weights & 0xFF) << WEIGHT_SHIFT)
    )
    return words.astype(np.uint32)


def unpack_rows(words):
    """Inverse of :func:`pack_rows`: ``(local_target, delay, weight, type)`` arrays."""
    w = np.asarray(words, dtype=np.int64)
    target = w & ((1 << TARGET_BITS) - 1)
    delay = ((w >> DELAY_SHIFT) & ((1 << DELAY_BITS) - 1)) + 1
    stype = (w >> TYPE_SHIFT) & 1
    weight = (w >> WEIGHT_SHIFT) & 0xFF
    weight = np.where(weight >= 128, weight - 256, weight)
    return target, delay, weight, stype


def _build_image(table, slot, source_vertex):
    t_lo, t_hi = slot.target_slice
    s_lo, s_hi = slot.source_slice
    mask = (
        (table.sources >= s_lo)
        & (table.sources < s_hi)
        & (table.targets >= t_lo)
        & (table.targets < t_hi)
    )
    src = table.sources[mask].astype(np.int64)
    words = pack_rows(table.targets[mask] - t_lo, table.delays[mask], table.weights[mask])
    # Table rows are sorted by source, so each block is a contiguous run.
    counts = np.bincount(src - s_lo, minlength=s_hi - s_lo)
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    if len(words) >= 1 << OFFSET_BITS:
        raise MappingError("synaptic matrix exceeds the address-list offset field")
    address_list = (offsets | (counts << LENGTH_SHIFT)).astype(np.uint32)
    mpt = np.array([[source_vertex & 0xFFFF, s_lo, s_hi]], dtype=np.uint32)
    return SerialPEImage(
        target_slice=slot.target_slice,
        source_slice=slot.source_slice,
        share=slot.share,
        n_shares=slot.n_shares,
        source_vertex=source_vertex,
        mpt=mpt,
        address_list=address_list,
        synaptic_matrix=words,
        breakdown=slot.breakdown,
    )


def compile_serial(
    layer: Union[LayerSpec, SynapseTable], hw=DEFAULT_HW, source_vertex=0
) -> SerialCompilation:
    """Compile one layer into serial PE images.

    A ``LayerSpec`` is realized first; an explicit ``SynapseTable`` is used
    as given, partitioned by its measured density.
    """
    if isinstance(layer, SynapseTable):
        table, spec = layer, layer.layer_spec()
    else:
        table, spec = realize_synapses(layer), layer
    slots = partition_serial(spec, hw)
    images = tuple(_build_image(table, slot, source_vertex) for slot in slots)
    return SerialCompilation(images, table.n_source, table.n_target, table.delay_range)

