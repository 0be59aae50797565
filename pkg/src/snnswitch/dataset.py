"""Layer-parameter sweep, paradigm labeling and CSV persistence."""

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from snnswitch.errors import ConfigError, MappingError
from snnswitch.hardware import DEFAULT_HW, HardwareConstants
from snnswitch.model import FEATURE_NAMES, FeatureVector, LayerSpec, layer_features
from snnswitch.parallel import parallel_pe_count
from snnswitch.serial import serial_pe_count

log = logging.getLogger(__name__)

SERIAL = "serial"
PARALLEL = "parallel"
LABELS = (SERIAL, PARALLEL)
CSV_HEADER = ("delay_range", "n_source", "n_target", "density", "serial_pes", "parallel_pes", "label")


def winning_paradigm(serial_pes, parallel_pes):
    """Paradigm needing fewer PEs; an equal count goes to the MAC array."""
    return PARALLEL if parallel_pes <= serial_pes else SERIAL


def _steps(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return tuple(start + i * step for i in range(n))


@dataclass(frozen=True)
class SweepConfig:
    source_range: tuple = _steps(50, 500, 50)
    target_range: tuple = _steps(50, 500, 50)
    density_range: tuple = tuple(round(0.1 * i, 2) for i in range(1, 11))
    delay_range: tuple = _steps(1, 16, 1)
    base_seed: int = 0

    def __post_init__(self):
        for name in ("source_range", "target_range", "density_range", "delay_range"):
            values = tuple(getattr(self, name))
            if not values:
                raise ConfigError(f"sweep {name} is empty")
            object.__setattr__(self, name, values)

    @property
    def size(self):
        return (
            len(self.source_range)
            * len(self.target_range)
            * len(self.density_range)
            * len(self.delay_range)
        )

    @classmethod
    def from_dict(cls, d):
        known = {"source_range", "target_range", "density_range", "delay_range", "base_seed"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sweep config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in d.items():
            if key == "base_seed":
                kwargs[key] = int(value)
            elif isinstance(value, dict):
                kwargs[key] = _steps(value["start"], value["stop"], value["step"])
            else:
                kwargs[key] = tuple(value)
        return cls(**kwargs)

    def to_dict(self):
        return {
            "source_range": list(self.source_range),
            "target_range": list(self.target_range),
            "density_range": list(self.density_range),
            "delay_range": list(self.delay_range),
            "base_seed": self.base_seed,
        }


def load_sweep_config(path):
    try:
        return SweepConfig.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read sweep config {path}: {exc}") from None


def grid_seed(base_seed, coords):
    state = np.random.SeedSequence([base_seed, *coords]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def generate_sweep(cfg: SweepConfig = SweepConfig()):
    """One LayerSpec per grid point, ordered by (n_source, n_target, density, delay)."""
    specs = []
    for i, ns in enumerate(cfg.source_range):
        for j, nt in enumerate(cfg.target_range):
            for k, rho in enumerate(cfg.density_range):
                for m, d in enumerate(cfg.delay_range):
                    specs.append(
                        LayerSpec(
                            n_source=int(ns),
                            n_target=int(nt),
                            delay_range=int(d),
                            weight_density=float(rho),
                            seed=grid_seed(cfg.base_seed, (i, j, k, m)),
                            max_delay=max(16, int(d)),
                        )
                    )
    return specs


@dataclass(frozen=True)
class DatasetRow:
    features: FeatureVector
    serial_pes: int
    parallel_pes: int
    label: str = field(default="")

    def __post_init__(self):
        expected = winning_paradigm(self.serial_pes, self.parallel_pes)
        if not self.label:
            object.__setattr__(self, "label", expected)
        elif self.label != expected:
            raise ConfigError(
                f"label {self.label!r} contradicts PE counts "
                f"serial={self.serial_pes} parallel={self.parallel_pes}"
            )

    @property
    def best_pes(self):
        return min(self.serial_pes, self.parallel_pes)

    def pes_for(self, paradigm):
        return self.serial_pes if paradigm == SERIAL else self.parallel_pes


def label_layer(spec: LayerSpec, hw=DEFAULT_HW) -> DatasetRow:
    return DatasetRow(
        layer_features(spec), serial_pe_count(spec, hw), parallel_pe_count(spec, hw=hw)
    )


def _label_or_reason(args):
    spec, hw_dict = args
    try:
        return label_layer(spec, HardwareConstants(**hw_dict)), None
    except MappingError as exc:
        return None, str(exc)


def label_sweep(specs, hw=DEFAULT_HW, workers=1, chunksize=64):
    """Label every spec; infeasible layers are logged and dropped.

    Results come back in ``specs`` order for any worker count.
    """
    jobs = [(s, hw.to_dict()) for s in specs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_label_or_reason, jobs, chunksize=chunksize))
    else:
        results = [_label_or_reason(j) for j in jobs]
    rows = []
    for spec, (row, reason) in zip(specs, results):
        if row is None:
            log.warning("excluded layer %s: %s", spec, reason)
        else:
            rows.append(row)
    return rows


# --- statistics --------------------------------------------------------------


def marginal_stats(rows):
    """Per feature and grid value: ``(value, serial_wins, parallel_wins)`` rows."""
    if not rows:
        raise ConfigError("marginal_stats needs a nonempty dataset")
    stats = {}
    for f, name in enumerate(FEATURE_NAMES):
        counts = {}
        for r in rows:
            v = r.features.as_tuple()[f]
            c = counts.setdefault(v, [0, 0])
            c[r.label == PARALLEL] += 1
        stats[name] = [(v, s, p) for v, (s, p) in sorted(counts.items())]
    return stats


def _fmt(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def marginal_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("value", "serial_wins", "parallel_wins", "parallel_win_rate"))
    for v, s, p in table:
        w.writerow((_fmt(v), s, p, f"{p / (s + p):.6f}"))
    return buf.getvalue()


def write_marginals(stats, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, table in stats.items():
        path = out_dir / f"marginal_{name}.csv"
        path.write_text(marginal_csv(table))
        paths.append(path)
    return paths


# --- CSV ---------------------------------------------------------------------


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        f = r.features
        w.writerow(
            (
                _fmt(f.delay_range),
                _fmt(f.n_source),
                _fmt(f.n_target),
                _fmt(f.weight_density),
                r.serial_pes,
                r.parallel_pes,
                r.label,
            )
        )
    return buf.getvalue()


def export_csv(rows, path):
    Path(path).write_text(rows_to_csv(rows))


def rows_from_csv(text, source="<csv>"):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ConfigError(f"{source}: line 1: expected header {','.join(CSV_HEADER)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        try:
            if len(rec) != len(CSV_HEADER):
                raise ValueError(f"expected {len(CSV_HEADER)} fields, got {len(rec)}")
            d, ns, nt, rho = (float(x) for x in rec[:4])
            s, p = int(rec[4]), int(rec[5])
            label = rec[6]
            if label not in LABELS:
                raise ValueError(f"bad label token {label!r}")
            rows.append(DatasetRow(FeatureVector(d, ns, nt, rho), s, p, label))
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{source}: line {lineno}: {exc}") from None
    return rows


def import_csv(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from None
    return rows_from_csv(text, str(path))


def features_matrix(rows):
    return np.array([r.features.as_tuple() for r in rows], dtype=np.float64)


def labels_vector(rows):
    """+1 for parallel, -1 for serial."""
    return np.array([1 if r.label == PARALLEL else -1 for r in rows], dtype=np.int64)
