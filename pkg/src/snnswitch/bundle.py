"""On-disk image bundles: a JSON manifest plus raw little-endian payloads.

Every payload is listed in the manifest with its element count and SHA-256
so a truncated or edited file is rejected on load.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from snnswitch.costs import MemoryBreakdown
from snnswitch.errors import BundleError
from snnswitch.parallel import (
    MERGE_DTYPE,
    DominantImage,
    ParallelDeployment,
    SubordinateImage,
)
from snnswitch.serial import SerialCompilation, SerialPEImage

BUNDLE_FORMAT = "snnswitch.bundle"
BUNDLE_VERSION = 1
MANIFEST = "manifest.json"

U32 = np.dtype("<u4")
U16 = np.dtype("<u2")
I8 = np.dtype("i1")


def _write(dirpath, name, array, dtype):
    data = np.ascontiguousarray(array, dtype=dtype).tobytes()
    (dirpath / name).write_bytes(data)
    return {"path": name, "count": int(np.asarray(array).size), "sha256": hashlib.sha256(data).hexdigest()}


def _read(dirpath, entry, dtype):
    try:
        data = (dirpath / entry["path"]).read_bytes()
    except (OSError, KeyError, TypeError) as exc:
        raise BundleError(f"missing payload in bundle {dirpath}: {exc}") from None
    if hashlib.sha256(data).hexdigest() != entry.get("sha256"):
        raise BundleError(f"checksum mismatch for {entry.get('path')} in {dirpath}")
    arr = np.frombuffer(data, dtype=dtype)
    if arr.size != entry.get("count"):
        raise BundleError(f"element count mismatch for {entry.get('path')} in {dirpath}")
    return arr.copy()


def write_serial_bundle(comp: SerialCompilation, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pes = []
    for i, img in enumerate(comp.pe_images):
        pes.append(
            {
                "target_slice": list(img.target_slice),
                "source_slice": list(img.source_slice),
                "share": img.share,
                "n_shares": img.n_shares,
                "source_vertex": img.source_vertex,
                "breakdown": img.breakdown.to_dict(),
                "payload_bytes": img.payload_bytes,
                "files": {
                    "mpt": _write(out, f"pe{i:03d}_mpt.bin", img.mpt, U32),
                    "address_list": _write(out, f"pe{i:03d}_address_list.bin", img.address_list, U32),
                    "synaptic_matrix": _write(
                        out, f"pe{i:03d}_synaptic_matrix.bin", img.synaptic_matrix, U32
                    ),
                },
            }
        )
    manifest = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "paradigm": "serial",
        "n_source": comp.n_source,
        "n_target": comp.n_target,
        "delay_range": comp.delay_range,
        "pe_count": comp.pe_count,
        "pes": pes,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def write_parallel_bundle(dep: ParallelDeployment, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dom = dep.dominant
    merge_bytes = np.ascontiguousarray(dom.input_merging_table).view(np.uint8).ravel()
    dominant = {
        "n_source": dom.n_source,
        "delay_range": dom.delay_range,
        "breakdown": dom.breakdown.to_dict(),
        "columns": [list(t) for t in dom.column_triples()],
        "files": {
            "reversed_order": _write(out, "dominant_reversed_order.bin", dom.reversed_order, U16),
            "input_merging_table": _write(out, "dominant_input_merging_table.bin", merge_bytes, np.uint8),
        },
    }
    subs = []
    for i, s in enumerate(dep.subordinates):
        subs.append(
            {
                "row_range": list(s.row_range),
                "col_range": list(s.col_range),
                "tile_shape": list(s.tile.shape),
                "n_temporal_batches": s.n_temporal_batches,
                "batch_index": s.batch_index,
                "breakdown": s.breakdown.to_dict(),
                "files": {"tile": _write(out, f"sub{i:03d}_tile.bin", s.tile, I8)},
            }
        )
    manifest = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "paradigm": "parallel",
        "n_source": dep.n_source,
        "n_target": dep.n_target,
        "delay_range": dep.delay_range,
        "n_columns": dep.n_columns,
        "pe_count": dep.pe_count,
        "dominant": dominant,
        "subordinates": subs,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def write_bundle(comp, out_dir):
    if isinstance(comp, SerialCompilation):
        return write_serial_bundle(comp, out_dir)
    if isinstance(comp, ParallelDeployment):
        return write_parallel_bundle(comp, out_dir)
    raise TypeError(f"cannot bundle {type(comp).__name__}")


def _load_serial(d, m):
    images = []
    for pe in m["pes"]:
        f = pe["files"]
        mpt = _read(d, f["mpt"], U32)
        if mpt.size % 3:
            raise BundleError("master population table is not a whole number of 96-bit entries")
        images.append(
            SerialPEImage(
                target_slice=tuple(pe["target_slice"]),
                source_slice=tuple(pe["source_slice"]),
                share=int(pe["share"]),
                n_shares=int(pe["n_shares"]),
                source_vertex=int(pe["source_vertex"]),
                mpt=mpt.astype(np.uint32).reshape(-1, 3),
                address_list=_read(d, f["address_list"], U32).astype(np.uint32),
                synaptic_matrix=_read(d, f["synaptic_matrix"], U32).astype(np.uint32),
                breakdown=MemoryBreakdown.from_dict(pe["breakdown"]),
            )
        )
    return SerialCompilation(tuple(images), int(m["n_source"]), int(m["n_target"]), int(m["delay_range"]))


def _load_parallel(d, m):
    dm = m["dominant"]
    shape = (int(dm["delay_range"]), int(dm["n_source"]))
    rev = _read(d, dm["files"]["reversed_order"], U16).astype(np.uint16)
    merge_raw = _read(d, dm["files"]["input_merging_table"], np.uint8)
    if rev.size != shape[0] * shape[1] or merge_raw.size != rev.size * MERGE_DTYPE.itemsize:
        raise BundleError("dominant tables do not match n_source x delay_range")
    merge = merge_raw.view(MERGE_DTYPE).reshape(shape)
    dominant = DominantImage(
        shape[1], shape[0], rev.reshape(shape), merge,
        np.zeros(shape, dtype=np.int32), MemoryBreakdown.from_dict(dm["breakdown"]),
    )
    subs = []
    for s in m["subordinates"]:
        tile = _read(d, s["files"]["tile"], I8)
        rows, cols = s["tile_shape"]
        if tile.size != rows * cols:
            raise BundleError("tile payload does not match its declared shape")
        subs.append(
            SubordinateImage(
                tuple(s["row_range"]), tuple(s["col_range"]), tile.reshape(rows, cols),
                int(s["n_temporal_batches"]), int(s["batch_index"]),
                MemoryBreakdown.from_dict(s["breakdown"]),
            )
        )
    return ParallelDeployment(
        int(m["n_source"]), int(m["n_target"]), int(m["delay_range"]), int(m["n_columns"]),
        dominant, tuple(subs),
    )


def load_bundle(bundle_dir):
    d = Path(bundle_dir)
    try:
        m = json.loads((d / MANIFEST).read_text())
    except OSError as exc:
        raise BundleError(f"cannot read bundle manifest in {d}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise BundleError(f"bundle manifest in {d} is not valid JSON: {exc}") from None
    if m.get("format") != BUNDLE_FORMAT or m.get("version") != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle format in {d}")
    try:
        if m["paradigm"] == "serial":
            return _load_serial(d, m)
        if m["paradigm"] == "parallel":
            return _load_parallel(d, m)
    except BundleError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"malformed bundle manifest in {d}: {exc!r}") from None
    raise BundleError(f"unknown paradigm {m.get('paradigm')!r} in {d}")
