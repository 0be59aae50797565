import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import serial_count
from snnswitch.errors import MappingError
from snnswitch.hardware import DEFAULT_HW
from snnswitch.model import LayerSpec, SynapseTable, gesture_network, realize_synapses
from snnswitch.serial import (
    compile_serial,
    equal_slices,
    pack_rows,
    partition_serial,
    serial_pe_count,
    unpack_rows,
)

DTCM = DEFAULT_HW.dtcm_bytes


def test_equal_slices():
    assert equal_slices(500, 255) == [(0, 250), (250, 500)]
    assert equal_slices(255, 255) == [(0, 255)]
    assert equal_slices(2048, 255)[0] == (0, 228) and len(equal_slices(2048, 255)) == 9


def test_large_target_count_uses_two_slices():
    slots = partition_serial(LayerSpec(100, 500, 1, 0.1))
    assert sorted({s.target_slice for s in slots}) == [(0, 250), (250, 500)]


def test_dense_255_layer_spreads_matrix_over_two_pes():
    # 4 * 255 * 255 * 0.3 = 78030 B of matrix alone pushes one PE past 98304 B.
    slots = partition_serial(LayerSpec(255, 255, 16, 0.3))
    assert len(slots) == 2
    assert {s.n_shares for s in slots} == {2}
    assert [s.source_slice for s in slots] == [(0, 128), (128, 255)]
    assert all(s.breakdown.total <= DTCM for s in slots)


def test_small_layer_fits_one_pe():
    assert serial_pe_count(LayerSpec(100, 100, 4, 0.1)) == 1
    assert serial_pe_count(LayerSpec(50, 50, 1, 0.1)) == 1


def test_full_density_2x2_structure():
    comp = compile_serial(LayerSpec(2, 2, 1, 1.0, seed=3))
    assert comp.pe_count == 1
    blocks = list(comp.pe_images[0].blocks())
    assert [src for src, _ in blocks] == [0, 1]
    assert all(len(rows) == 2 for _, rows in blocks)


def test_gesture_hidden_layer_matrix_bytes():
    layer = gesture_network().projections[0].layer
    comp = compile_serial(layer)
    matrix = sum(img.breakdown.synaptic_matrix for img in comp.pe_images)
    # 4 * 2048 * 20 * 0.0316 = 5177.3 B, rounded up per source slice.
    assert 5177 <= matrix <= 5177 + comp.pe_count
    assert comp.pe_count == 9


def test_empty_layer_is_an_error():
    with pytest.raises(Exception, match="empty layer"):
        compile_serial(LayerSpec(3, 3, 1, 0.05))


def test_count_matches_brute_force_oracle():
    cases = [
        (500, 500, 1.0, 16),
        (500, 500, 1.0, 1),
        (255, 255, 0.3, 16),
        (510, 100, 0.9, 1),
        (100, 511, 1.0, 1),
        (2048, 20, 0.0316, 1),
        (300, 450, 0.6, 7),
    ]
    for ns, nt, rho, d in cases:
        assert serial_pe_count(LayerSpec(ns, nt, d, rho)) == serial_count(ns, nt, rho, d), (ns, nt, rho, d)


@given(
    ns=st.integers(1, 600),
    nt=st.integers(1, 600),
    d=st.integers(1, 16),
    rho=st.sampled_from([0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0]),
)
def test_count_oracle_property(ns, nt, d, rho):
    assert serial_pe_count(LayerSpec(ns, nt, d, rho)) == serial_count(ns, nt, rho, d)


@given(
    ns=st.integers(1, 600),
    nt=st.integers(1, 599),
    d=st.integers(1, 15),
    rho=st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]),
)
def test_count_is_monotone(ns, nt, d, rho):
    base = serial_pe_count(LayerSpec(ns, nt, d, rho))
    assert serial_pe_count(LayerSpec(ns, nt + 1, d, rho)) >= base
    assert serial_pe_count(LayerSpec(ns, nt, d + 1, rho)) >= base
    assert serial_pe_count(LayerSpec(ns, nt, d, round(rho + 0.1, 2))) >= base


def test_density_sweep_never_decreases_count():
    counts = [serial_pe_count(LayerSpec(400, 300, 8, round(0.1 * i, 1))) for i in range(1, 11)]
    assert counts == sorted(counts)


small_layers = st.builds(
    LayerSpec,
    n_source=st.integers(1, 300),
    n_target=st.integers(1, 300),
    delay_range=st.integers(1, 16),
    weight_density=st.sampled_from([0.1, 0.5, 1.0]),
    seed=st.integers(0, 1000),
).filter(lambda s: s.n_synapses > 0)


@given(small_layers)
def test_compilation_agrees_with_count_and_budget(spec):
    comp = compile_serial(spec)
    assert comp.pe_count == serial_pe_count(spec)
    assert all(img.breakdown.total <= DTCM for img in comp.pe_images)


@given(small_layers)
def test_blocks_cover_table_exactly(spec):
    table = realize_synapses(spec)
    comp = compile_serial(table)
    seen = []
    for img in comp.pe_images:
        t_lo = img.target_slice[0]
        for src, rows in img.blocks():
            tgt, delay, weight, stype = unpack_rows(rows)
            assert np.array_equal(stype, (weight < 0).astype(int))
            seen.extend(zip([src] * len(rows), (tgt + t_lo).tolist(), weight.tolist(), delay.tolist()))
    assert sorted(seen) == table.entries()


@given(
    st.lists(
        st.tuples(st.integers(0, 511), st.integers(1, 16), st.integers(-128, 127).filter(bool)),
        max_size=50,
    )
)
def test_row_word_round_trip(rows):
    t = [r[0] for r in rows]
    d = [r[1] for r in rows]
    w = [r[2] for r in rows]
    tgt, delay, weight, stype = unpack_rows(pack_rows(t, d, w))
    assert tgt.tolist() == t and delay.tolist() == d and weight.tolist() == w
    assert stype.tolist() == [int(x < 0) for x in w]


def test_row_word_field_limits():
    with pytest.raises(MappingError, match="4-bit"):
        pack_rows([0], [17], [1])
    with pytest.raises(MappingError, match="9-bit"):
        pack_rows([512], [1], [1])


def test_mpt_lookup_and_miss():
    table = SynapseTable.from_entries(4, 2, [(0, 0, 5, 1), (0, 1, -3, 2), (3, 1, 9, 1)])
    comp = compile_serial(table, source_vertex=7)
    img = comp.pe_images[0]
    assert img.mpt_entries() == [(7, (0, 4), 0)]
    assert len(img.lookup(7, 0)) == 2
    assert len(img.lookup(7, 1)) == 0
    with pytest.raises(KeyError):
        img.lookup(7, 4)
    with pytest.raises(KeyError):
        img.lookup(6, 0)
    assert img.payload_bytes == 4 * (3 + 4 + 3)


def test_unmappable_layer():
    hw = DEFAULT_HW.with_overrides(dtcm_bytes=6200)
    with pytest.raises(MappingError, match="unmappable"):
        partition_serial(LayerSpec(200, 10, 16, 1.0), hw)


def test_smaller_budget_needs_more_pes():
    spec = LayerSpec(255, 255, 4, 0.5)
    assert serial_pe_count(spec, DEFAULT_HW.with_overrides(dtcm_bytes=64 * 1024)) > serial_pe_count(spec)
