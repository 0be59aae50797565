# # Compiling one layer both ways
#
# The serial backend slices targets and sources into PEs of at most 255
# neurons. The parallel backend builds a dense weight-delay-map and cuts it
# across subordinate PEs behind a single dominant PE.

from snnswitch.model import LayerSpec, realize_synapses
from snnswitch.parallel import build_weight_delay_map, compile_parallel, plan_split
from snnswitch.serial import compile_serial, unpack_rows

spec = LayerSpec(n_source=400, n_target=300, delay_range=4, weight_density=0.4, seed=1)
table = realize_synapses(spec)
print(spec, "->", len(table), "synapses")

ser = compile_serial(table)
print("serial PEs:", ser.pe_count)
for img in ser.pe_images:
    print(f"  targets {img.target_slice} sources {img.source_slice} share {img.share + 1}/{img.n_shares}"
          f" {img.breakdown.total} B")

# Decode the first source block on the first PE.
key, rows = next(ser.pe_images[0].blocks())
target, delay, weight, stype = unpack_rows(rows[:5])
print("source", key, "targets", target, "delays", delay, "weights", weight)

wdm = build_weight_delay_map(table)
print("weight-delay-map:", wdm.n_target, "rows x", wdm.n_columns, "surviving (source, delay) columns")
plan = plan_split(wdm.n_target, wdm.n_columns, 98304, spec.delay_range)
print("split: spatial", plan.spatial, "temporal", plan.temporal)

par = compile_parallel(table)
print("parallel PEs:", par.pe_count, "(1 dominant +", len(par.subordinates), "subordinates)")

# Long delays multiply the columns, which is where parallel starts to lose.
for d in (1, 4, 16):
    s = LayerSpec(400, 300, d, 0.4, seed=1)
    print(f"delay {d:>2}: serial {compile_serial(s).pe_count}, parallel {compile_parallel(s).pe_count}")
