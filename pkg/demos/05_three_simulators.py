# # Checking compiled images by simulation
#
# The reference LIF works from the synapse table. The serial simulator walks
# MPT, address list and row words; the parallel one stacks delayed spikes on
# the dominant PE and multiplies tiles. All three use the same fixed-point
# neuron, so their rasters must match spike for spike.

import numpy as np

from snnswitch.model import LayerSpec, NeuronParams, realize_synapses
from snnswitch.parallel import compile_parallel
from snnswitch.serial import compile_serial
from snnswitch.sim import first_divergence, random_raster, reference_lif, simulate_parallel, simulate_serial

table = realize_synapses(LayerSpec(64, 48, 8, 0.5, seed=3))
params = NeuronParams(alpha_q=29491, v_th=64)
raster = random_raster(64, 100, 0.05, seed=1)

ref, cur = reference_lif(table, params, raster, 100, record_currents=True)
ser = simulate_serial(compile_serial(table), params, raster, 100)
par = simulate_parallel(compile_parallel(table, budget=12000), params, raster, 100)
print(len(raster), "input spikes,", len(ref), "output spikes")
print("serial == reference:", ser == ref, " parallel == reference:", par == ref)
print("first divergence:", first_divergence(ref, par))

# Spike counts per output neuron, and the injected charge per step.
print(np.bincount([n for n, _ in ref.events], minlength=48))
print(cur.sum(axis=1)[:20])
