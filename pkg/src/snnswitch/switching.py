"""Layer-granularity paradigm switching and deployment plans."""

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from snnswitch import parallel as parallel_backend
from snnswitch import serial as serial_backend
from snnswitch.classifier import predict
from snnswitch.dataset import PARALLEL, SERIAL, features_matrix, winning_paradigm
from snnswitch.errors import ConfigError, MappingError
from snnswitch.hardware import DEFAULT_HW
from snnswitch.model import build_application_graph, gesture_network, layer_features

log = logging.getLogger(__name__)

MODES = ("predicted", "ideal", "serial", "parallel")

PE_COUNTING_CONVENTION = (
    "Totals count the PEs of every projection layer: serial = one PE per "
    "(target slice, source slice, matrix share) with slices capped at the "
    "per-PE neuron limit; parallel = 1 dominant + all subordinate PEs. "
    "Spike-source (input) populations occupy no PEs unless count_input_pes "
    "is set, in which case each adds ceil(size / neuron cap) PEs to every "
    "mode. Layers are never co-located on one PE."
)


@dataclass
class LayerPlan:
    layer_id: int
    source: str
    target: str
    paradigm: str
    pe_count: int
    breakdowns: list
    predicted: Optional[str] = None
    fallback: bool = False
    note: str = ""
    alternative_pe_count: Optional[int] = None
    compilation: object = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            "layer_id": self.layer_id,
            "source": self.source,
            "target": self.target,
            "paradigm": self.paradigm,
            "predicted": self.predicted,
            "pe_count": self.pe_count,
            "alternative_pe_count": self.alternative_pe_count,
            "fallback": self.fallback,
            "note": self.note,
            "bytes": sum(b.total for b in self.breakdowns),
            "breakdowns": [b.to_dict() for b in self.breakdowns],
        }


@dataclass
class DeploymentPlan:
    mode: str
    layers: list
    input_pes: int = 0

    @property
    def layer_pe_total(self):
        return sum(lp.pe_count for lp in self.layers)

    @property
    def pe_total(self):
        return self.layer_pe_total + self.input_pes

    @property
    def bytes_total(self):
        return sum(b.total for lp in self.layers for b in lp.breakdowns)

    @property
    def fallbacks(self):
        return [lp.layer_id for lp in self.layers if lp.fallback]

    def to_dict(self):
        return {
            "mode": self.mode,
            "pe_total": self.pe_total,
            "layer_pe_total": self.layer_pe_total,
            "input_pes": self.input_pes,
            "bytes_total": self.bytes_total,
            "fallbacks": self.fallbacks,
            "convention": PE_COUNTING_CONVENTION,
            "layers": [lp.to_dict() for lp in self.layers],
        }


def _compile(paradigm, layer, hw, source_vertex):
    if paradigm == SERIAL:
        comp = serial_backend.compile_serial(layer, hw, source_vertex=source_vertex)
        return comp, [img.breakdown for img in comp.pe_images]
    comp = parallel_backend.compile_parallel(layer, hw)
    return comp, [comp.dominant.breakdown] + [s.breakdown for s in comp.subordinates]


def _layers(net):
    graph = build_application_graph(net)
    for edge in graph.edges:
        proj = net.projections[edge.index]
        # Density-described layers compile from their LayerSpec so counts match the sweep labels.
        layer = proj.synapses if proj.synapses is not None else proj.layer
        yield edge, proj, layer


def _input_pes(net, hw, count_input_pes):
    if not count_input_pes:
        return 0
    cap = hw.serial_neuron_cap
    return sum(-(-p.size // cap) for p in net.populations if p.is_input)


def _other(paradigm):
    return PARALLEL if paradigm == SERIAL else SERIAL


def compile_with_switching(net, model, hw=DEFAULT_HW, count_input_pes=False) -> DeploymentPlan:
    """Predict each layer's paradigm and compile with that backend only.

    If the predicted backend cannot map the layer, the other one is tried
    and the layer is marked as a fallback.
    """
    plans = []
    for edge, proj, layer in _layers(net):
        choice = predict(model, layer_features(proj.layer))
        try:
            comp, bds = _compile(choice, layer, hw, edge.source)
            plans.append(LayerPlan(edge.index, proj.source, proj.target, choice, len(bds), bds,
                                   predicted=choice, compilation=comp))
        except MappingError as exc:
            alt = _other(choice)
            log.warning("layer %d: predicted %s failed (%s); falling back to %s",
                        edge.index, choice, exc, alt)
            comp, bds = _compile(alt, layer, hw, edge.source)
            plans.append(LayerPlan(edge.index, proj.source, proj.target, alt, len(bds), bds,
                                   predicted=choice, fallback=True, note=str(exc),
                                   compilation=comp))
    return DeploymentPlan("predicted", plans, _input_pes(net, hw, count_input_pes))


def compile_ideal(net, hw=DEFAULT_HW, count_input_pes=False) -> DeploymentPlan:
    """Compile both paradigms per layer and keep the one with fewer PEs."""
    plans = []
    for edge, proj, layer in _layers(net):
        results, errors = {}, {}
        for paradigm in (SERIAL, PARALLEL):
            try:
                results[paradigm] = _compile(paradigm, layer, hw, edge.source)
            except MappingError as exc:
                errors[paradigm] = str(exc)
        if not results:
            raise MappingError(f"layer {edge.index}: both paradigms failed: {errors}")
        if len(results) == 2:
            best = winning_paradigm(len(results[SERIAL][1]), len(results[PARALLEL][1]))
            alt_count = len(results[_other(best)][1])
        else:
            best, alt_count = next(iter(results)), None
        comp, bds = results[best]
        note = "; ".join(f"{k} failed: {v}" for k, v in errors.items())
        plans.append(LayerPlan(edge.index, proj.source, proj.target, best, len(bds), bds,
                               note=note, alternative_pe_count=alt_count, compilation=comp))
    return DeploymentPlan("ideal", plans, _input_pes(net, hw, count_input_pes))


def compile_forced(net, paradigm, hw=DEFAULT_HW, count_input_pes=False) -> DeploymentPlan:
    if paradigm not in (SERIAL, PARALLEL):
        raise ConfigError(f"unknown paradigm {paradigm!r}")
    plans = []
    for edge, proj, layer in _layers(net):
        comp, bds = _compile(paradigm, layer, hw, edge.source)
        plans.append(LayerPlan(edge.index, proj.source, proj.target, paradigm, len(bds), bds,
                               compilation=comp))
    return DeploymentPlan(paradigm, plans, _input_pes(net, hw, count_input_pes))


def compile_network(net, mode, model=None, hw=DEFAULT_HW, count_input_pes=False):
    if mode == "predicted":
        if model is None:
            raise ConfigError("predicted mode needs a trained model")
        return compile_with_switching(net, model, hw, count_input_pes)
    if mode == "ideal":
        return compile_ideal(net, hw, count_input_pes)
    if mode in (SERIAL, PARALLEL):
        return compile_forced(net, mode, hw, count_input_pes)
    raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")


# --- average-PE-per-delay report ----------------------------------------------


@dataclass(frozen=True)
class DelayReportRow:
    delay_range: int
    n_layers: int
    avg_pe_serial: float
    avg_pe_parallel: float
    avg_pe_predicted: float
    avg_pe_ideal: float


def delay_range_report(rows, model, strict_groups=False):
    """Average PEs per delay range for serial, parallel, predicted and ideal."""
    if not rows:
        raise ConfigError("delay_range_report needs a nonempty dataset")
    predicted = model.predict_labels(features_matrix(rows))
    groups = defaultdict(list)
    for r, choice in zip(rows, predicted):
        groups[int(r.features.delay_range)].append((r, choice))
    sizes = {len(g) for g in groups.values()}
    if len(sizes) > 1:
        msg = f"delay-range groups have unequal sizes {sorted(sizes)}"
        if strict_groups:
            raise ConfigError(msg)
        log.warning("%s; averaging over actual counts", msg)
    report = []
    for d in sorted(groups):
        g = groups[d]
        report.append(
            DelayReportRow(
                d,
                len(g),
                float(np.mean([r.serial_pes for r, _ in g])),
                float(np.mean([r.parallel_pes for r, _ in g])),
                float(np.mean([r.pes_for(c) for r, c in g])),
                float(np.mean([r.best_pes for r, _ in g])),
            )
        )
    return report


def delay_report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("delay_range", "n_layers", "avg_pe_serial", "avg_pe_parallel",
                "avg_pe_predicted", "avg_pe_ideal"))
    for r in report:
        w.writerow((r.delay_range, r.n_layers, f"{r.avg_pe_serial:.6f}", f"{r.avg_pe_parallel:.6f}",
                    f"{r.avg_pe_predicted:.6f}", f"{r.avg_pe_ideal:.6f}"))
    return buf.getvalue()


# --- gesture-network reference point ----------------------------------------------

GESTURE_REFERENCE = {"serial": 9, "parallel": 5, "switching": 4}


def gesture_report(model, hw=DEFAULT_HW, delay_range=1, count_input_pes=False):
    """Compile the 2048-20-4 network in every mode and compare to 9/5/4."""
    net = gesture_network(delay_range=delay_range)
    plans = {
        "serial": compile_forced(net, SERIAL, hw, count_input_pes),
        "parallel": compile_forced(net, PARALLEL, hw, count_input_pes),
        "switching": compile_with_switching(net, model, hw, count_input_pes),
        "ideal": compile_ideal(net, hw, count_input_pes),
    }
    totals = {k: p.pe_total for k, p in plans.items()}
    deviations = {k: totals[k] - v for k, v in GESTURE_REFERENCE.items()}
    per_layer = {k: [(lp.paradigm, lp.pe_count) for lp in p.layers] for k, p in plans.items()}
    explanation = []
    for k, dev in deviations.items():
        if dev:
            layers = ", ".join(f"layer {i}: {par} x{n}" for i, (par, n) in enumerate(per_layer[k]))
            explanation.append(
                f"{k}: {totals[k]} vs reference {GESTURE_REFERENCE[k]} ({dev:+d}); {layers}"
            )
    return {
        "delay_range": delay_range,
        "count_input_pes": count_input_pes,
        "totals": totals,
        "reference": GESTURE_REFERENCE,
        "deviations": deviations,
        "per_layer": per_layer,
        "ordered": totals["switching"] <= totals["parallel"] <= totals["serial"],
        "convention": PE_COUNTING_CONVENTION,
        "explanation": explanation,
    }
