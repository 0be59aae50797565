# # Per-PE memory cost model
#
# Every compiled PE is charged byte by byte against the 96 kB DTCM budget.
# Here we look at how a serial PE's footprint grows with its size, and how
# the parallel subordinate cost depends on MAC tile padding.

import numpy as np

from snnswitch.costs import serial_cost, subordinate_cost
from snnswitch.hardware import DEFAULT_HW, pad_to

print("DTCM budget:", DEFAULT_HW.dtcm_bytes, "bytes")

# A serial PE holding 200 targets fed by 200 sources at 30% density, delay range 8.
b = serial_cost(200, 1, 1, 0.3, 8, n_source_neuron=200)
for name, value in b.to_dict().items():
    print(f"  {name:<24}{value:>8}")

# Synaptic matrix bytes dominate once the source count is large.
for ns in (50, 100, 200, 255):
    total = serial_cost(255, 1, 1, 1.0, 16, n_source_neuron=ns).total
    print(f"sources {ns:>3}: {total:>7} B, fits={total <= DEFAULT_HW.dtcm_bytes}")

# Spreading the matrix over k PEs divides its share.
print([serial_cost(255, 1, 1, 1.0, 16, n_source_neuron=255, n_matrix_shares=k).synaptic_matrix
       for k in (1, 2, 3, 4)])

# # Tile padding on the parallel side
#
# A weight-delay-map is padded to multiples of 4 rows and 16 columns, so a
# 5 x 17 map pays for an 8 x 32 tile.

rows, cols = 5, 17
print((pad_to(rows, 4), pad_to(cols, 16)), subordinate_cost(pad_to(rows, 4) * pad_to(cols, 16), rows, 2).total)

waste = [1 - (r * c) / (pad_to(r, 4) * pad_to(c, 16)) for r, c in zip(range(1, 9), range(10, 90, 10))]
print("padding waste:", np.round(waste, 3))
