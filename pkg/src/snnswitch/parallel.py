"""MAC-array parallel paradigm: weight-delay-map, dominant tables, two-stage split.

The weight-delay-map has one row per target neuron and one column per
(source, delay) pair that carries at least one synapse. Columns are ordered
delay-major, then by source. The dense tile is zero-padded to the MAC
array layout (rows to ``mac_rows``, columns to ``mac_cols``).
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from snnswitch.costs import MemoryBreakdown, dominant_cost, subordinate_cost
from snnswitch.errors import MappingError
from snnswitch.hardware import DEFAULT_HW, pad_to
from snnswitch.model import LayerSpec, SynapseTable, realize_synapses

ELIMINATED = 0xFFFF
MERGE_DTYPE = np.dtype([("column", "<u2"), ("count", "u1")])


@dataclass(frozen=True, eq=False)
class WeightDelayMap:
    n_source: int
    n_target: int
    delay_range: int
    columns: np.ndarray  # (n_columns, 2) int32: source, delay
    tile: np.ndarray  # (pad rows, pad cols) int8

    @property
    def n_columns(self):
        return len(self.columns)

    @property
    def rows(self):
        return np.arange(self.n_target)

    @property
    def bytes(self):
        return self.tile.size

    def dense(self):
        """Unpadded ``(n_target, n_columns)`` weights."""
        return self.tile[: self.n_target, : self.n_columns]


def column_keys(table: SynapseTable):
    return (table.delays.astype(np.int64) - 1) * table.n_source + table.sources


def build_weight_delay_map(table: SynapseTable, hw=DEFAULT_HW) -> WeightDelayMap:
    if len(table) == 0:
        raise MappingError("empty map: synapse table has no entries")
    keys = column_keys(table)
    uniq = np.unique(keys)
    col = np.searchsorted(uniq, keys)
    tile = np.zeros(
        (pad_to(table.n_target, hw.mac_rows), pad_to(len(uniq), hw.mac_cols)), dtype=np.int8
    )
    tile[table.targets, col] = table.weights
    columns = np.stack([uniq % table.n_source, uniq // table.n_source + 1], axis=1)
    tile.setflags(write=False)
    return WeightDelayMap(
        table.n_source, table.n_target, table.delay_range, columns.astype(np.int32), tile
    )


# --- two-stage splitting ---------------------------------------------------


def balanced_units(n_units, k):
    """Distribute ``n_units`` over ``k`` parts; earlier parts take the remainder."""
    base, extra = divmod(n_units, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def _ranges(n_items, unit, k):
    """Cut ``range(n_items)`` into ``k`` unit-aligned near-equal ranges."""
    out, lo = [], 0
    for units in balanced_units(pad_to(n_items, unit) // unit, k):
        hi = min(lo + units * unit, n_items)
        out.append((lo, hi))
        lo = hi
    return out


@dataclass(frozen=True)
class SplitPlan:
    spatial: int  # k row chunks
    temporal: int  # m column batches per chunk
    row_chunks: tuple
    col_batches: tuple

    @property
    def n_subordinates(self):
        return self.spatial * self.temporal


def _fits(row_chunks, col_batches, budget, delay_range, n_proj, hw):
    for r_lo, r_hi in row_chunks:
        rows = pad_to(r_hi - r_lo, hw.mac_rows)
        for c_lo, c_hi in col_batches:
            cols = pad_to(c_hi - c_lo, hw.mac_cols)
            cost = subordinate_cost(rows * cols, r_hi - r_lo, delay_range, n_proj, hw=hw)
            if cost.total > budget:
                return False
    return True


def plan_split(n_rows, n_cols, budget, delay_range, n_projection_type=2, hw=DEFAULT_HW):
    """Choose the subordinate layout for an ``n_rows x n_cols`` map.

    Stage 1 searches the smallest number of row chunks ``k`` (each a whole
    number of ``mac_rows`` groups) that fits whole; only when even
    single-group chunks overflow does stage 2 cut columns into the smallest
    number of ``mac_cols``-aligned batches ``m``.
    """
    smallest = subordinate_cost(
        hw.mac_rows * hw.mac_cols, min(n_rows, hw.mac_rows), delay_range, n_projection_type, hw=hw
    )
    if budget < smallest.total:
        raise MappingError(
            f"unmappable layer: budget {budget} B is below one {hw.mac_rows}x{hw.mac_cols} "
            f"tile plus subordinate overhead ({smallest.total} B)"
        )
    full_cols = ((0, n_cols),)
    n_groups = pad_to(n_rows, hw.mac_rows) // hw.mac_rows
    for k in range(1, n_groups + 1):
        chunks = tuple(_ranges(n_rows, hw.mac_rows, k))
        if _fits(chunks, full_cols, budget, delay_range, n_projection_type, hw):
            return SplitPlan(k, 1, chunks, full_cols)
    n_col_groups = pad_to(n_cols, hw.mac_cols) // hw.mac_cols
    for m in range(2, n_col_groups + 1):
        batches = tuple(_ranges(n_cols, hw.mac_cols, m))
        if _fits(chunks, batches, budget, delay_range, n_projection_type, hw):
            return SplitPlan(n_groups, m, chunks, batches)
    raise MappingError("unmappable layer: map does not fit even as single MAC tiles")


@dataclass(frozen=True, eq=False)
class SubordinateImage:
    row_range: tuple
    col_range: tuple
    tile: np.ndarray
    n_temporal_batches: int
    batch_index: int
    breakdown: MemoryBreakdown

    @property
    def map_slice(self):
        r_lo, r_hi = self.row_range
        c_lo, c_hi = self.col_range
        return self.tile[: r_hi - r_lo, : c_hi - c_lo]


def two_stage_split(
    wdm: WeightDelayMap, budget, n_projection_type=2, hw=DEFAULT_HW, plan: Optional[SplitPlan] = None
):
    """Cut ``wdm`` into subordinate images that each fit ``budget`` bytes."""
    if plan is None:
        plan = plan_split(wdm.n_target, wdm.n_columns, budget, wdm.delay_range, n_projection_type, hw)
    subs = []
    for r_lo, r_hi in plan.row_chunks:
        for b, (c_lo, c_hi) in enumerate(plan.col_batches):
            tile = np.zeros(
                (pad_to(r_hi - r_lo, hw.mac_rows), pad_to(c_hi - c_lo, hw.mac_cols)), dtype=np.int8
            )
            tile[: r_hi - r_lo, : c_hi - c_lo] = wdm.tile[r_lo:r_hi, c_lo:c_hi]
            tile.setflags(write=False)
            cost = subordinate_cost(tile.size, r_hi - r_lo, wdm.delay_range, n_projection_type, hw=hw)
            subs.append(SubordinateImage((r_lo, r_hi), (c_lo, c_hi), tile, plan.temporal, b, cost))
    return subs


# --- dominant PE -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DominantImage:
    n_source: int
    delay_range: int
    reversed_order: np.ndarray  # (delay_range, n_source) uint16 column index
    input_merging_table: np.ndarray  # (delay_range, n_source) MERGE_DTYPE
    stacked_input: np.ndarray  # (delay_range, n_source) int32 placeholder
    breakdown: MemoryBreakdown

    def column_triples(self):
        d_idx, src = np.nonzero(self.reversed_order != ELIMINATED)
        cols = self.reversed_order[d_idx, src]
        return [(int(s), int(d + 1), int(c)) for s, d, c in zip(src, d_idx, cols)]


def build_dominant(wdm: WeightDelayMap, breakdown: MemoryBreakdown) -> DominantImage:
    if wdm.n_columns >= ELIMINATED:
        raise MappingError("too many map columns for 16-bit reversed-order entries")
    rev = np.full((wdm.delay_range, wdm.n_source), ELIMINATED, dtype=np.uint16)
    src, delay = wdm.columns[:, 0], wdm.columns[:, 1]
    rev[delay - 1, src] = np.arange(wdm.n_columns)
    merge = np.zeros((wdm.delay_range, wdm.n_source), dtype=MERGE_DTYPE)
    merge["column"] = rev
    nnz = np.count_nonzero(wdm.dense(), axis=0)
    merge["count"][delay - 1, src] = np.minimum(nnz, 255)
    stacked = np.zeros((wdm.delay_range, wdm.n_source), dtype=np.int32)
    for a in (rev, merge, stacked):
        a.setflags(write=False)
    return DominantImage(wdm.n_source, wdm.delay_range, rev, merge, stacked, breakdown)


@dataclass(frozen=True)
class ParallelDeployment:
    n_source: int
    n_target: int
    delay_range: int
    n_columns: int
    dominant: DominantImage
    subordinates: tuple

    @property
    def pe_count(self):
        return 1 + len(self.subordinates)

    @property
    def bytes_total(self):
        return self.dominant.breakdown.total + sum(s.breakdown.total for s in self.subordinates)


def _as_table(layer):
    if isinstance(layer, SynapseTable):
        return layer, layer.layer_spec()
    return realize_synapses(layer), layer


def _dominant_breakdown(spec, hw, literal_neuron_model):
    dom = dominant_cost(
        spec.n_source,
        spec.delay_range,
        spec.n_target,
        n_source_vertex=1,
        literal_neuron_model=literal_neuron_model,
        max_connected_rate=spec.weight_density,
        hw=hw,
    )
    if dom.total > hw.dtcm_bytes:
        raise MappingError(
            f"dominant overflow: {dom.total} B of pre-processing tables exceed {hw.dtcm_bytes} B"
        )
    return dom


def compile_parallel(
    layer: Union[LayerSpec, SynapseTable], hw=DEFAULT_HW, budget=None, literal_neuron_model=False
) -> ParallelDeployment:
    """Compile one layer into a dominant PE plus split subordinate PEs.

    ``budget`` caps subordinate PEs only and defaults to the DTCM size.
    """
    table, spec = _as_table(layer)
    dom_cost = _dominant_breakdown(spec, hw, literal_neuron_model)
    wdm = build_weight_delay_map(table, hw)
    subs = two_stage_split(
        wdm, hw.dtcm_bytes if budget is None else budget, spec.n_projection_type, hw
    )
    return ParallelDeployment(
        table.n_source,
        table.n_target,
        table.delay_range,
        wdm.n_columns,
        build_dominant(wdm, dom_cost),
        tuple(subs),
    )


def parallel_pe_count(layer: Union[LayerSpec, SynapseTable], hw=DEFAULT_HW, budget=None,
                      literal_neuron_model=False) -> int:
    """PE count of :func:`compile_parallel` without materializing tiles."""
    table, spec = _as_table(layer)
    _dominant_breakdown(spec, hw, literal_neuron_model)
    if len(table) == 0:
        raise MappingError("empty map: synapse table has no entries")
    n_cols = len(np.unique(column_keys(table)))
    plan = plan_split(
        table.n_target,
        n_cols,
        hw.dtcm_bytes if budget is None else budget,
        table.delay_range,
        spec.n_projection_type,
        hw,
    )
    return 1 + plan.n_subordinates


def reconstruct_dense(dep: ParallelDeployment):
    """Re-scatter all subordinate tiles into the unpadded dense map."""
    out = np.zeros((dep.n_target, dep.n_columns), dtype=np.int64)
    for sub in dep.subordinates:
        r_lo, r_hi = sub.row_range
        c_lo, c_hi = sub.col_range
        out[r_lo:r_hi, c_lo:c_hi] += sub.map_slice
    return out
