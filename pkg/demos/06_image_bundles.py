# # Writing and reloading compiled images
#
# A bundle is a manifest plus raw little-endian tables, checksummed so a
# damaged file is caught on load.

import tempfile
from pathlib import Path

from snnswitch.bundle import load_bundle, write_bundle
from snnswitch.errors import BundleError
from snnswitch.model import LayerSpec, NeuronParams, realize_synapses
from snnswitch.parallel import compile_parallel
from snnswitch.sim import random_raster, simulate_parallel

table = realize_synapses(LayerSpec(100, 80, 4, 0.5, seed=2))
dep = compile_parallel(table)

with tempfile.TemporaryDirectory() as tmp:
    out = write_bundle(dep, Path(tmp) / "layer")
    for p in sorted(out.iterdir()):
        print(f"  {p.name:<36}{p.stat().st_size:>8} B")
    back = load_bundle(out)
    raster = random_raster(100, 50, 0.05, seed=0)
    same = simulate_parallel(back, NeuronParams(), raster, 50) == simulate_parallel(dep, NeuronParams(), raster, 50)
    print("reloaded bundle simulates identically:", same)

    tile = out / "sub000_tile.bin"
    tile.write_bytes(b"\x01" + tile.read_bytes()[1:])
    try:
        load_bundle(out)
    except BundleError as exc:
        print("rejected:", exc)
