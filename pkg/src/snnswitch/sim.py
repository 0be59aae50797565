"""Functional execution of compiled layers with bit-exact fixed-point LIF.

Three routes compute the same spike raster: a dense reference, the serial
event loop driven by the PE images' lookup tables, and the parallel route
that stacks delayed inputs and multiplies them on 4x16 MAC tiles.
"""

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from snnswitch.errors import ConfigError, SimulationError
from snnswitch.model import NeuronParams, SynapseTable, projection_table
from snnswitch.parallel import ELIMINATED, ParallelDeployment
from snnswitch.serial import SerialCompilation, unpack_rows

INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1


@dataclass(frozen=True)
class SpikeRaster:
    """Spike events ``(neuron, timestep)`` sorted by timestep, then neuron."""

    events: tuple
    horizon: int

    def __post_init__(self):
        events = tuple(sorted({(int(n), int(t)) for n, t in self.events}, key=lambda e: (e[1], e[0])))
        for n, t in events:
            if not 0 <= t < self.horizon or n < 0:
                raise ConfigError(f"spike ({n}, {t}) outside horizon {self.horizon}")
        object.__setattr__(self, "events", events)

    def __len__(self):
        return len(self.events)

    @classmethod
    def empty(cls, horizon):
        return cls((), horizon)

    @classmethod
    def from_dense(cls, spikes):
        """``spikes`` is a boolean ``(T, n_neurons)`` array."""
        t, n = np.nonzero(spikes)
        return cls(tuple(zip(n.tolist(), t.tolist())), spikes.shape[0])

    def to_dense(self, n_neurons):
        out = np.zeros((self.horizon, n_neurons), dtype=bool)
        for n, t in self.events:
            if n >= n_neurons:
                raise ConfigError(f"spike neuron {n} >= population size {n_neurons}")
            out[t, n] = True
        return out

    def neurons_at(self, t):
        return {n for n, tt in self.events if tt == t}


def random_raster(n_neurons, horizon, rate, seed):
    rng = np.random.default_rng(seed)
    return SpikeRaster.from_dense(rng.random((horizon, n_neurons)) < rate)


def first_divergence(a: SpikeRaster, b: SpikeRaster):
    """Earliest ``(neuron, t)`` present in exactly one raster, or None."""
    diff = set(a.events) ^ set(b.events)
    if not diff:
        return None
    return min(diff, key=lambda e: (e[1], e[0]))


def raster_to_csv(r: SpikeRaster):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("neuron", "timestep"))
    w.writerows(r.events)
    return buf.getvalue()


def raster_from_csv(text, horizon):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["neuron", "timestep"]:
        raise ConfigError("raster CSV needs header 'neuron,timestep'")
    events = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        try:
            events.append((int(rec[0]), int(rec[1])))
        except (ValueError, IndexError):
            raise ConfigError(f"raster CSV line {lineno}: malformed record {rec!r}") from None
    return SpikeRaster(tuple(events), horizon)


def write_raster(r, path):
    Path(path).write_text(raster_to_csv(r))


def read_raster(path, horizon):
    return raster_from_csv(Path(path).read_text(), horizon)


class LifPopulation:
    """Fixed-point LIF state shared by all three simulators.

    ``v <- I + ((v * alpha_q) >> 15)``, spike when ``v >= v_th``, then
    subtract ``v_th`` (or reset to 0). Membranes saturate at int32 bounds
    and set ``saturated`` instead of wrapping.
    """

    def __init__(self, n, params: NeuronParams):
        self.params = params
        self.v = np.full(n, params.v_init, dtype=np.int64)
        self.saturated = False

    def step(self, current):
        p = self.params
        v = np.asarray(current, dtype=np.int64) + ((self.v * p.alpha_q) >> 15)
        clipped = np.clip(v, INT32_MIN, INT32_MAX)
        if np.any(clipped != v):
            self.saturated = True
        spikes = clipped >= p.v_th
        if p.reset == "subtract":
            clipped = np.where(spikes, clipped - p.v_th, clipped)
        else:
            clipped = np.where(spikes, 0, clipped)
        self.v = clipped
        return spikes


def _source_matrix(input_raster, n_source, T, strict=True):
    S = np.zeros((T, n_source), dtype=bool)
    for n, t in input_raster.events:
        if t >= T:
            continue
        if n >= n_source:
            if strict:
                raise ConfigError(f"input spike from neuron {n} but layer has {n_source} sources")
            continue
        S[t, n] = True
    return S


def _check_recurrent(recurrent, n_source, n_target):
    if recurrent and n_source != n_target:
        raise ConfigError("recurrent simulation needs n_source == n_target")


def _finish(spikes, currents, record_currents):
    raster = SpikeRaster.from_dense(spikes)
    return (raster, currents) if record_currents else raster


def reference_lif(
    table: SynapseTable, params: NeuronParams, input_raster: SpikeRaster, T,
    recurrent=False, record_currents=False,
):
    """Dense reference: ``I_j(t) = sum of w over synapses i->j with i spiking at t-d``."""
    if T < 1:
        raise ConfigError("T must be >= 1")
    _check_recurrent(recurrent, table.n_source, table.n_target)
    W = table.dense()  # (D, n_target, n_source)
    W_exc = np.where(W > 0, W, 0)
    W_inh = np.where(W < 0, -W, 0)
    S = _source_matrix(input_raster, table.n_source, T)
    lif = LifPopulation(table.n_target, params)
    out = np.zeros((T, table.n_target), dtype=bool)
    currents = np.zeros((T, table.n_target), dtype=np.int64)
    for t in range(T):
        exc = np.zeros(table.n_target, dtype=np.int64)
        inh = np.zeros(table.n_target, dtype=np.int64)
        for d in range(1, min(table.delay_range, t) + 1):
            x = S[t - d].astype(np.int64)
            exc += W_exc[d - 1] @ x
            inh += W_inh[d - 1] @ x
        currents[t] = exc - inh
        out[t] = lif.step(currents[t])
        if recurrent:
            S[t] |= out[t]
    return _finish(out, currents, record_currents)


class _SerialCore:
    """Runtime state of one serial PE: synaptic input ring buffer per type."""

    def __init__(self, image, delay_range):
        self.image = image
        t_lo, t_hi = image.target_slice
        self.n = t_hi - t_lo
        self.D = delay_range
        self.ring = np.zeros((delay_range, 2, self.n), dtype=np.int64)
        self.ptr = 0

    def receive(self, key):
        try:
            rows = self.image.lookup(self.image.source_vertex, key)
        except KeyError:
            raise SimulationError(f"routing miss: key {key} not in master population table") from None
        if not len(rows):
            return
        tgt, delay, weight, stype = unpack_rows(rows)
        slots = (self.ptr + delay - 1) % self.D
        np.add.at(self.ring, (slots, stype, tgt), np.abs(weight))

    def drain(self):
        cur = self.ring[self.ptr, 0] - self.ring[self.ptr, 1]
        self.ring[self.ptr] = 0
        self.ptr = (self.ptr + 1) % self.D
        return cur


def _serial_router(comp):
    routes = {}
    for i, img in enumerate(comp.pe_images):
        for vertex, (lo, hi), _ in img.mpt_entries():
            for key in range(lo, hi):
                routes.setdefault((vertex, key), []).append(i)
    return routes


def simulate_serial(
    comp: SerialCompilation, params: NeuronParams, input_raster: SpikeRaster, T,
    recurrent=False, record_currents=False, source_vertex=None,
):
    """Event-driven run: each spike walks MPT -> address list -> block rows."""
    if T < 1:
        raise ConfigError("T must be >= 1")
    _check_recurrent(recurrent, comp.n_source, comp.n_target)
    cores = [_SerialCore(img, comp.delay_range) for img in comp.pe_images]
    routes = _serial_router(comp)
    if source_vertex is None:
        source_vertex = comp.pe_images[0].source_vertex
    S = _source_matrix(input_raster, comp.n_source, T, strict=False)
    extra = [(n, t) for n, t in input_raster.events if n >= comp.n_source and t < T]
    lif = LifPopulation(comp.n_target, params)
    out = np.zeros((T, comp.n_target), dtype=bool)
    currents = np.zeros((T, comp.n_target), dtype=np.int64)
    for t in range(T):
        if t > 0:
            keys = np.nonzero(S[t - 1])[0].tolist() + [n for n, tt in extra if tt == t - 1]
            for key in keys:
                targets = routes.get((source_vertex, key))
                if targets is None:
                    raise SimulationError(f"routing miss: no PE accepts spike key {key}")
                for i in targets:
                    cores[i].receive(key)
        for core in cores:
            lo, hi = core.image.target_slice
            currents[t, lo:hi] += core.drain()
        out[t] = lif.step(currents[t])
        if recurrent:
            S[t] |= out[t]
    return _finish(out, currents, record_currents)


def _mac_tile_product(tile, x, rows, cols):
    """Blocked ``tile @ x`` over ``rows x cols`` MAC tiles with 32-bit accumulators."""
    R, C = tile.shape
    blocks = tile.astype(np.int64).reshape(R // rows, rows, C // cols, cols)
    acc = np.einsum("abcd,cd->ab", blocks, x.reshape(C // cols, cols)).reshape(R)
    if acc.min(initial=0) < INT32_MIN or acc.max(initial=0) > INT32_MAX:
        raise SimulationError("MAC accumulator overflow")
    return acc


def simulate_parallel(
    dep: ParallelDeployment, params: NeuronParams, input_raster: SpikeRaster, T,
    recurrent=False, record_currents=False, mac_rows=4, mac_cols=16,
):
    """Stacked-input run: delayed spikes gathered via reversed order, then MAC tiles."""
    if T < 1:
        raise ConfigError("T must be >= 1")
    _check_recurrent(recurrent, dep.n_source, dep.n_target)
    dom = dep.dominant
    rev = dom.reversed_order.astype(np.int64)
    valid = rev != ELIMINATED
    if np.any(rev[valid] >= dep.n_columns):
        bad = int(rev[valid].max())
        raise SimulationError(f"merge fault: reversed order points at column {bad} of {dep.n_columns}")
    d_idx, src_idx = np.nonzero(valid)
    col_idx = rev[d_idx, src_idx]
    S = _source_matrix(input_raster, dep.n_source, T)
    stacked = np.zeros((dom.delay_range, dep.n_source), dtype=np.int64)
    lif = LifPopulation(dep.n_target, params)
    out = np.zeros((T, dep.n_target), dtype=bool)
    currents = np.zeros((T, dep.n_target), dtype=np.int64)
    for t in range(T):
        # Row d-1 holds the spike vector from t-d.
        stacked[1:] = stacked[:-1].copy()
        stacked[0] = S[t - 1] if t > 0 else 0
        x = np.zeros(dep.n_columns, dtype=np.int64)
        x[col_idx] = stacked[d_idx, src_idx]
        for sub in dep.subordinates:
            r_lo, r_hi = sub.row_range
            c_lo, c_hi = sub.col_range
            xb = np.zeros(sub.tile.shape[1], dtype=np.int64)
            xb[: c_hi - c_lo] = x[c_lo:c_hi]
            acc = _mac_tile_product(sub.tile, xb, mac_rows, mac_cols)
            currents[t, r_lo:r_hi] += acc[: r_hi - r_lo]
        out[t] = lif.step(currents[t])
        if recurrent:
            S[t] |= out[t]
    return _finish(out, currents, record_currents)


# --- whole-network execution ---------------------------------------------------


def _run_layer(comp, table, params, raster, T, recurrent, record_currents):
    if comp is None:
        return reference_lif(table, params, raster, T, recurrent, record_currents)
    if isinstance(comp, SerialCompilation):
        return simulate_serial(comp, params, raster, T, recurrent, record_currents)
    if isinstance(comp, ParallelDeployment):
        return simulate_parallel(comp, params, raster, T, recurrent, record_currents)
    raise ConfigError(f"cannot simulate {type(comp).__name__}")


def simulate_network(net, input_rasters, T, compilations=None):
    """Run every non-input population and return ``{name: SpikeRaster}``.

    Each non-input population needs exactly one incoming projection. A
    self-projection runs as a recurrent layer driven by ``input_rasters``
    for that population, if given. ``compilations`` maps projection index to
    a serial or parallel compilation; missing layers use the dense reference.
    """
    compilations = compilations or {}
    incoming = {}
    for i, proj in enumerate(net.projections):
        if proj.target in incoming:
            raise ConfigError(f"population {proj.target!r} has more than one incoming projection")
        incoming[proj.target] = i
    rasters = {}
    for p in net.populations:
        if p.is_input:
            rasters[p.name] = input_rasters.get(p.name, SpikeRaster.empty(T))
        elif p.name not in incoming:
            raise ConfigError(f"population {p.name!r} has no incoming projection")
    pending = [p for p in net.populations if not p.is_input]
    while pending:
        progressed = False
        for p in list(pending):
            proj = net.projections[incoming[p.name]]
            recurrent = proj.source == proj.target
            if not recurrent and proj.source not in rasters:
                continue
            drive = input_rasters.get(p.name, SpikeRaster.empty(T)) if recurrent else rasters[proj.source]
            table = projection_table(proj)
            rasters[p.name] = _run_layer(
                compilations.get(incoming[p.name]), table, p.params, drive, T, recurrent, False
            )
            pending.remove(p)
            progressed = True
        if not progressed:
            raise ConfigError("network projections form a cycle across populations")
    return rasters
