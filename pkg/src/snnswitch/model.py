"""Network descriptions, seeded synapse realization and layer features."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from snnswitch.errors import ConfigError

EXCITATORY = 0
INHIBITORY = 1
DEFAULT_MAX_DELAY = 16


@dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one projection layer."""

    n_source: int
    n_target: int
    delay_range: int
    weight_density: float
    seed: int = 0
    n_projection_type: int = 2
    max_delay: int = DEFAULT_MAX_DELAY

    def __post_init__(self):
        if self.n_source < 1 or self.n_target < 1:
            raise ConfigError("layer needs at least one source and one target neuron")
        if not (0.0 < self.weight_density <= 1.0) or not math.isfinite(self.weight_density):
            raise ConfigError(f"weight_density must be in (0, 1], got {self.weight_density}")
        if self.delay_range < 1:
            raise ConfigError("delay_range must be >= 1")
        if self.delay_range > self.max_delay:
            raise ConfigError(
                f"delay_range {self.delay_range} exceeds the configured maximum {self.max_delay}"
            )
        if self.n_projection_type < 1:
            raise ConfigError("n_projection_type must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def n_synapses(self):
        return int(round(self.weight_density * self.n_source * self.n_target))


@dataclass(frozen=True, eq=False)
class SynapseTable:
    """Sparse synapse list, canonically sorted by (source, target).

    Weights are signed 8-bit and never zero; the synapse type is carried by
    the sign (positive excitatory, negative inhibitory).
    """

    n_source: int
    n_target: int
    delay_range: int
    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        n = len(self.sources)
        arrays = (self.sources, self.targets, self.weights, self.delays)
        if any(len(a) != n for a in arrays):
            raise ConfigError("synapse arrays must have equal length")
        for a in arrays:
            a.setflags(write=False)

    @classmethod
    def from_entries(cls, n_source, n_target, entries, delay_range=None):
        """Build a table from ``(source, target, weight, delay)`` tuples."""
        arr = np.asarray(list(entries), dtype=np.int64).reshape(-1, 4)
        src, tgt, w, d = arr.T
        if len(arr):
            if src.min() < 0 or src.max() >= n_source or tgt.min() < 0 or tgt.max() >= n_target:
                raise ConfigError("synapse endpoint out of range")
            if np.any(w == 0) or w.min() < -128 or w.max() > 127:
                raise ConfigError("weights must be nonzero signed 8-bit integers")
            if d.min() < 1:
                raise ConfigError("synapse delays must be >= 1")
        if delay_range is None:
            delay_range = int(d.max()) if len(arr) else 1
        if len(arr) and d.max() > delay_range:
            raise ConfigError("synapse delay exceeds delay_range")
        order = np.lexsort((tgt, src))
        flat = src[order] * n_target + tgt[order]
        if np.any(np.diff(flat) == 0):
            raise ConfigError("duplicate (source, target) synapse")
        return cls(
            n_source=int(n_source),
            n_target=int(n_target),
            delay_range=int(delay_range),
            sources=src[order].astype(np.int32),
            targets=tgt[order].astype(np.int32),
            weights=w[order].astype(np.int8),
            delays=d[order].astype(np.int16),
        )

    def __len__(self):
        return len(self.sources)

    def __eq__(self, other):
        if not isinstance(other, SynapseTable):
            return NotImplemented
        return (
            (self.n_source, self.n_target, self.delay_range)
            == (other.n_source, other.n_target, other.delay_range)
            and np.array_equal(self.sources, other.sources)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.delays, other.delays)
        )

    @property
    def synapse_types(self):
        return np.where(self.weights > 0, EXCITATORY, INHIBITORY).astype(np.int8)

    @property
    def density(self):
        return len(self) / (self.n_source * self.n_target)

    def entries(self):
        return list(
            zip(
                self.sources.tolist(),
                self.targets.tolist(),
                self.weights.tolist(),
                self.delays.tolist(),
            )
        )

    def dense(self):
        """Dense ``(n_delay, n_target, n_source)`` weight tensor, delay index d-1."""
        out = np.zeros((self.delay_range, self.n_target, self.n_source), dtype=np.int64)
        out[self.delays - 1, self.targets, self.sources] = self.weights
        return out

    def layer_spec(self, seed=0, n_projection_type=2):
        return LayerSpec(
            n_source=self.n_source,
            n_target=self.n_target,
            delay_range=self.delay_range,
            weight_density=self.density,
            seed=seed,
            n_projection_type=n_projection_type,
            max_delay=max(DEFAULT_MAX_DELAY, self.delay_range),
        )


@dataclass(frozen=True)
class NeuronParams:
    """Fixed-point LIF parameters; decay factor is ``alpha_q / 2**15``."""

    alpha_q: int = 29491
    v_th: int = 64
    v_init: int = 0
    n_param: int = 14
    reset: str = "subtract"

    def __post_init__(self):
        if not 0 <= self.alpha_q < 2**15:
            raise ConfigError("alpha_q must be in [0, 2**15)")
        if not 0 < self.v_th < 2**31:
            raise ConfigError("v_th must be a positive signed 32-bit value")
        if not -(2**31) <= self.v_init < 2**31:
            raise ConfigError("v_init must fit in signed 32 bits")
        if self.reset not in ("subtract", "zero"):
            raise ConfigError("reset must be 'subtract' or 'zero'")


@dataclass(frozen=True)
class FeatureVector:
    delay_range: float
    n_source: float
    n_target: float
    weight_density: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"feature values must be finite and positive, got {v}")

    def as_tuple(self):
        return (self.delay_range, self.n_source, self.n_target, self.weight_density)

    def as_array(self):
        return np.array(self.as_tuple(), dtype=np.float64)


FEATURE_NAMES = ("delay_range", "n_source", "n_target", "density")


@dataclass(frozen=True)
class Population:
    name: str
    size: int
    params: Optional[NeuronParams] = None

    @property
    def is_input(self):
        return self.params is None


@dataclass(frozen=True)
class Projection:
    source: str
    target: str
    layer: LayerSpec
    synapses: Optional[SynapseTable] = None


@dataclass(frozen=True)
class NetworkSpec:
    populations: tuple
    projections: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "populations", tuple(self.populations))
        object.__setattr__(self, "projections", tuple(self.projections))
        names = [p.name for p in self.populations]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate population name")

    def population(self, name):
        for p in self.populations:
            if p.name == name:
                return p
        raise ConfigError(f"unknown population {name!r}")


@dataclass(frozen=True)
class Vertex:
    index: int
    population: Population


@dataclass(frozen=True)
class Edge:
    index: int
    source: int
    target: int
    layer: LayerSpec
    synapses: SynapseTable


@dataclass
class ApplicationGraph:
    vertices: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def vertex(self, name):
        for v in self.vertices:
            if v.population.name == name:
                return v
        raise KeyError(name)


def realize_synapses(spec: LayerSpec) -> SynapseTable:
    """Draw a seeded random synapse table for ``spec``.

    Positions are sampled uniformly without replacement from the
    ``n_source x n_target`` grid; delays are uniform on ``[1, delay_range]``
    and weights uniform on ``[-128, 127]`` excluding zero.
    """
    m = spec.n_synapses
    if m == 0:
        raise ConfigError("empty layer: density * n_source * n_target rounds to 0")
    rng = np.random.default_rng(spec.seed)
    flat = np.sort(rng.choice(spec.n_source * spec.n_target, size=m, replace=False))
    delays = rng.integers(1, spec.delay_range + 1, size=m)
    raw = rng.integers(0, 255, size=m)
    weights = np.where(raw < 128, raw - 128, raw - 127)
    return SynapseTable(
        n_source=spec.n_source,
        n_target=spec.n_target,
        delay_range=spec.delay_range,
        sources=(flat // spec.n_target).astype(np.int32),
        targets=(flat % spec.n_target).astype(np.int32),
        weights=weights.astype(np.int8),
        delays=delays.astype(np.int16),
    )


def projection_table(proj: Projection) -> SynapseTable:
    if proj.synapses is not None:
        return proj.synapses
    return realize_synapses(proj.layer)


def build_application_graph(net: NetworkSpec) -> ApplicationGraph:
    graph = ApplicationGraph()
    index = {}
    for i, pop in enumerate(net.populations):
        graph.vertices.append(Vertex(i, pop))
        index[pop.name] = i
    for j, proj in enumerate(net.projections):
        for end in (proj.source, proj.target):
            if end not in index:
                raise ConfigError(f"projection {j} references unknown population {end!r}")
        src = net.populations[index[proj.source]]
        tgt = net.populations[index[proj.target]]
        if tgt.is_input:
            raise ConfigError(f"projection {j} targets input population {tgt.name!r}")
        if (proj.layer.n_source, proj.layer.n_target) != (src.size, tgt.size):
            raise ConfigError(
                f"projection {j} shape {proj.layer.n_source}x{proj.layer.n_target} "
                f"does not match populations {src.size}x{tgt.size}"
            )
        graph.edges.append(
            Edge(j, index[proj.source], index[proj.target], proj.layer, projection_table(proj))
        )
    return graph


def layer_features(spec: LayerSpec) -> FeatureVector:
    return FeatureVector(
        float(spec.delay_range),
        float(spec.n_source),
        float(spec.n_target),
        float(spec.weight_density),
    )


# --- JSON documents -------------------------------------------------------


def _params_from_dict(d):
    try:
        return NeuronParams(**d)
    except TypeError as exc:
        raise ConfigError(f"bad neuron params {d!r}: {exc}") from None


def network_from_dict(doc) -> NetworkSpec:
    try:
        pops_doc = doc["populations"]
    except (KeyError, TypeError):
        raise ConfigError("network document needs a 'populations' list") from None
    pops = []
    for p in pops_doc:
        if p.get("input"):
            params = None
        else:
            params = _params_from_dict(p.get("params", {}))
        pops.append(Population(str(p["name"]), int(p["size"]), params))
    sizes = {p.name: p.size for p in pops}
    projections = []
    for j, pr in enumerate(doc.get("projections", [])):
        src, tgt = pr.get("from"), pr.get("to")
        if src not in sizes or tgt not in sizes:
            raise ConfigError(f"projection {j} references unknown population")
        n_types = int(pr.get("n_projection_type", 2))
        seed = int(pr.get("seed", 0))
        if "synapses" in pr:
            table = SynapseTable.from_entries(
                sizes[src], sizes[tgt], pr["synapses"], pr.get("delay_range")
            )
            layer = table.layer_spec(seed=seed, n_projection_type=n_types)
        else:
            table = None
            delay = int(pr["delay_range"])
            layer = LayerSpec(
                n_source=sizes[src],
                n_target=sizes[tgt],
                delay_range=delay,
                weight_density=float(pr["density"]),
                seed=seed,
                n_projection_type=n_types,
                max_delay=max(DEFAULT_MAX_DELAY, int(pr.get("max_delay", DEFAULT_MAX_DELAY))),
            )
        projections.append(Projection(src, tgt, layer, table))
    return NetworkSpec(tuple(pops), tuple(projections))


def network_to_dict(net: NetworkSpec):
    pops = []
    for p in net.populations:
        if p.is_input:
            pops.append({"name": p.name, "size": p.size, "input": True})
        else:
            prm = p.params
            pops.append(
                {
                    "name": p.name,
                    "size": p.size,
                    "params": {
                        "alpha_q": prm.alpha_q,
                        "v_th": prm.v_th,
                        "v_init": prm.v_init,
                        "reset": prm.reset,
                    },
                }
            )
    projs = []
    for pr in net.projections:
        d = {"from": pr.source, "to": pr.target, "seed": pr.layer.seed}
        if pr.synapses is not None:
            d["delay_range"] = pr.synapses.delay_range
            d["synapses"] = [list(e) for e in pr.synapses.entries()]
        else:
            d["delay_range"] = pr.layer.delay_range
            d["density"] = pr.layer.weight_density
        projs.append(d)
    return {"populations": pops, "projections": projs}


def load_network(path) -> NetworkSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read network file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"network file {path} is not valid JSON: {exc}") from None
    return network_from_dict(doc)


def single_layer_network(spec: LayerSpec, params: NeuronParams = NeuronParams()):
    return NetworkSpec(
        (Population("source", spec.n_source), Population("target", spec.n_target, params)),
        (Projection("source", "target", spec),),
    )


GESTURE_DENSITY = 0.0316


def gesture_network(delay_range=1, seed=2048, params=NeuronParams()) -> NetworkSpec:
    """The 2048-20-4 gesture-recognition topology at 3.16% density."""
    return NetworkSpec(
        (
            Population("input", 2048),
            Population("hidden", 20, params),
            Population("output", 4, params),
        ),
        (
            Projection("input", "hidden", LayerSpec(2048, 20, delay_range, GESTURE_DENSITY, seed)),
            Projection("hidden", "output", LayerSpec(20, 4, delay_range, GESTURE_DENSITY, seed + 1)),
        ),
    )
