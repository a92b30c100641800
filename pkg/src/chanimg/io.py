"""On-disk artifact formats.

Every format carries a major version; readers reject unknown majors.

  - dataset:    JSON Lines, one link per line, '#'-comment header with
                version, units and the generating seed
  - codec:      JSON bundle of virtual-path ranges and scaler parameters
  - images:     binary "CHIM": magic, u32 version/count/rows/cols, float32
                pixel payload, then one float64 (dist2d, height) pair per
                image.  Image i of a file derived from a dataset pairs with
                link i % n_links (realizations/samples are stored as
                repeated blocks of the full dataset).
  - checkpoint: binary "WGPC": magic, u32 version, u32 header length, JSON
                header (metadata + named array table), float64 payload
  - reports:    CSV with a '#'-comment identifying the metric, version and
                seed, then a regular header row
"""

import csv
import json
import re
import struct
from pathlib import Path

import numpy as np

from .core import LinkRecord, LinkState, PathParams
from .codec import ChannelImageCodec
from .errors import DataError, FormatError, VersionError
from .genmodel.nn import Mlp
from .genmodel.resampler import EmpiricalResampler
from .genmodel.wgan import NetworkParams

DATASET_VERSION = 1
CODEC_VERSION = 1
IMAGES_VERSION = 1
CHECKPOINT_VERSION = 1
REPORT_VERSION = 1

IMAGES_MAGIC = b"CHIM"
CHECKPOINT_MAGIC = b"WGPC"

_PATH_FIELDS = ("pathloss", "delay", "aod", "zod", "aoa", "zoa", "phase")


def _require_version(kind: str, got: int, expected: int):
    if got != expected:
        raise VersionError(f"{kind} format v{got} not supported (expected v{expected})")


# -- dataset JSONL ---------------------------------------------------------------


def write_dataset(path, links, seed=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    seed_part = f" seed={seed}" if seed is not None else ""
    header = (f"# chanimg-dataset v{DATASET_VERSION}{seed_part}"
              " units: coords=m freq=Hz pathloss=dB delay=s angles=deg phase=deg")
    with path.open("w") as fh:
        fh.write(header + "\n")
        for lk in links:
            rec = {
                "tx": list(lk.tx),
                "rx": list(lk.rx),
                "carrier_freq": lk.carrier_freq,
                "link_state": lk.link_state.value,
                "paths": [{f: getattr(p, f) for f in _PATH_FIELDS} for p in lk.paths],
            }
            fh.write(json.dumps(rec) + "\n")


def read_dataset(path):
    path = Path(path)
    links = []
    with path.open() as fh:
        header = fh.readline()
        m = re.match(r"# chanimg-dataset v(\d+)\b", header)
        if not m:
            raise FormatError(f"{path}: missing dataset header")
        _require_version("dataset", int(m.group(1)), DATASET_VERSION)
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
                links.append(LinkRecord(
                    tx=tuple(rec["tx"]),
                    rx=tuple(rec["rx"]),
                    carrier_freq=rec["carrier_freq"],
                    link_state=LinkState(rec["link_state"]),
                    paths=[PathParams(**{f: p[f] for f in _PATH_FIELDS})
                           for p in rec["paths"]],
                ))
            except (KeyError, ValueError, TypeError) as exc:
                raise FormatError(f"{path}:{line_no}: bad link record: {exc}") from exc
    return links


# -- codec JSON ------------------------------------------------------------------


def write_codec(path, codec: ChannelImageCodec, seed=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"format": "chanimg-codec", "version": CODEC_VERSION, "seed": seed}
    doc.update(codec.to_dict())
    path.write_text(json.dumps(doc, indent=2) + "\n")


def read_codec(path) -> ChannelImageCodec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if doc.get("format") != "chanimg-codec":
        raise FormatError(f"{path}: not a codec file")
    _require_version("codec", doc.get("version", -1), CODEC_VERSION)
    try:
        return ChannelImageCodec.from_dict(doc)
    except KeyError as exc:
        raise FormatError(f"{path}: missing codec field {exc}") from exc


# -- channel image tensors --------------------------------------------------------


def write_images(path, images, conditions, seed=None):
    images = np.asarray(images)
    conditions = np.asarray(conditions, dtype=np.float64)
    if images.ndim != 3 or len(images) != len(conditions):
        raise DataError("need (N, rows, cols) images and matching (N, 2) conditions")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(IMAGES_MAGIC)
        fh.write(struct.pack("<4I", IMAGES_VERSION, images.shape[0],
                             images.shape[1], images.shape[2]))
        fh.write(np.ascontiguousarray(images, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(conditions, dtype="<f8").tobytes())


def read_images(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != IMAGES_MAGIC:
        raise FormatError(f"{path}: not a channel image file")
    version, count, rows, cols = struct.unpack_from("<4I", raw, 4)
    _require_version("images", version, IMAGES_VERSION)
    offset = 4 + 16
    pixel_bytes = count * rows * cols * 4
    cond_bytes = count * 2 * 8
    if len(raw) != offset + pixel_bytes + cond_bytes:
        raise FormatError(f"{path}: truncated image file")
    images = np.frombuffer(raw, dtype="<f4", count=count * rows * cols,
                           offset=offset).reshape(count, rows, cols)
    conditions = np.frombuffer(raw, dtype="<f8", count=count * 2,
                               offset=offset + pixel_bytes).reshape(count, 2)
    return images.copy(), conditions.copy()


# -- model checkpoints -------------------------------------------------------------


def _write_checkpoint(path, meta: dict, arrays: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()]
    header = json.dumps({"meta": meta, "entries": entries}).encode()
    with path.open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<2I", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def _read_checkpoint(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint file")
    version, header_len = struct.unpack_from("<2I", raw, 4)
    _require_version("checkpoint", version, CHECKPOINT_VERSION)
    offset = 4 + 8
    try:
        doc = json.loads(raw[offset:offset + header_len].decode())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: corrupt checkpoint header: {exc}") from exc
    offset += header_len
    arrays = {}
    for entry in doc["entries"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        if offset + 8 * n > len(raw):
            raise FormatError(f"{path}: truncated checkpoint payload")
        arrays[entry["name"]] = np.frombuffer(
            raw, dtype="<f8", count=n, offset=offset).reshape(shape).copy()
        offset += 8 * n
    return doc["meta"], arrays


_NET_NAMES = ("gen_embed", "generator", "critic_embed", "critic")


def write_wgan_checkpoint(path, netp: NetworkParams, seed=None):
    meta = {
        "backend": "wgan-gp",
        "seed": seed,
        "noise_dim": netp.noise_dim,
        "image_shape": list(netp.image_shape),
        "nets": {name: {"sizes": getattr(netp, name).sizes,
                        "out_act": getattr(netp, name).out_act,
                        "hidden_act": getattr(netp, name).hidden_act}
                 for name in _NET_NAMES},
    }
    arrays = {"cond_min": netp.cond_min, "cond_max": netp.cond_max}
    for name in _NET_NAMES:
        net = getattr(netp, name)
        for l in range(net.n_layers):
            arrays[f"{name}.{l}.W"] = net.params[2 * l]
            arrays[f"{name}.{l}.b"] = net.params[2 * l + 1]
    _write_checkpoint(path, meta, arrays)


def write_resampler_checkpoint(path, model: EmpiricalResampler, seed=None):
    meta = {"backend": "resampler", "seed": seed, "k": model.k}
    _write_checkpoint(path, meta, {
        "images": np.asarray(model.images, dtype=np.float64),
        "conditions": model.conditions,
    })


def read_model_checkpoint(path):
    """Returns ("wgan-gp", NetworkParams) or ("resampler", EmpiricalResampler)."""
    meta, arrays = _read_checkpoint(path)
    backend = meta.get("backend")
    try:
        if backend == "wgan-gp":
            nets = {}
            for name in _NET_NAMES:
                spec = meta["nets"][name]
                params = []
                for l in range(len(spec["sizes"]) - 1):
                    params.append(arrays[f"{name}.{l}.W"])
                    params.append(arrays[f"{name}.{l}.b"])
                nets[name] = Mlp(spec["sizes"], spec["out_act"], params,
                                 hidden_act=spec.get("hidden_act", "silu"))
            netp = NetworkParams(
                cond_min=arrays["cond_min"], cond_max=arrays["cond_max"],
                noise_dim=meta["noise_dim"], image_shape=tuple(meta["image_shape"]),
                **nets)
            netp.check_finite()
            return backend, netp
        if backend == "resampler":
            return backend, EmpiricalResampler(arrays["images"], arrays["conditions"],
                                               k=meta["k"])
    except KeyError as exc:
        raise FormatError(f"{path}: incomplete checkpoint: {exc}") from exc
    raise FormatError(f"{path}: unknown backend {backend!r}")


# -- CSV reports -------------------------------------------------------------------


def write_report_csv(path, name: str, seed, header, rows):
    """rows: iterable of sequences aligned with header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# chanimg-report v{REPORT_VERSION} name={name} seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_training_log(path, log, seed=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# chanimg-report v{REPORT_VERSION} name=training-log seed={seed}"
                 f" generator_params={log.param_counts.get('generator')}"
                 f" critic_params={log.param_counts.get('critic')}\n")
        writer = csv.writer(fh)
        writer.writerow(["step", "critic_loss", "gen_loss", "gp_term"])
        for row in log.rows():
            writer.writerow([row["step"], row["critic_loss"], row["gen_loss"],
                             row["gp_term"]])
