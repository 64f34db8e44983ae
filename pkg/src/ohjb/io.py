"""Config documents and result files (CSV series, JSON summary, SVG trajectory)."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .channel import ChannelParams
from .dynamics import CostParams, DynamicsParams, WindModel
from .protocol import ProtocolConfig
from .sim import LearnParams, SimConfig, SimResult

_SECTIONS = {
    "wind": WindModel,
    "dynamics": DynamicsParams,
    "cost": CostParams,
    "learn": LearnParams,
    "protocol": ProtocolConfig,
    "channel": ChannelParams,
}


class ConfigError(ValueError):
    pass


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    if hasattr(x, "value"):  # enums
        return x.value
    return x


def config_to_dict(cfg: SimConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            out[f.name] = {g.name: _plain(getattr(val, g.name))
                           for g in dataclasses.fields(val)}
        else:
            out[f.name] = _plain(val)
    return out


def config_from_dict(d: dict, base: SimConfig | None = None) -> SimConfig:
    """Overlay a (possibly partial) config document on ``base``."""
    base = base or SimConfig()
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    changes = {}
    for key, val in d.items():
        if key in _SECTIONS:
            if not isinstance(val, dict):
                raise ConfigError(f"section {key!r} must be a mapping")
            section = getattr(base, key)
            fields = {f.name for f in dataclasses.fields(section)}
            bad = set(val) - fields
            if bad:
                raise ConfigError(f"unknown keys in {key!r}: {sorted(bad)}")
            if key == "learn" and "scale" in val:
                val = {**val, "scale": tuple(val["scale"])}
            try:
                changes[key] = dataclasses.replace(section, **val)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"invalid {key!r} section: {e}") from e
        elif key == "source":
            changes[key] = tuple(float(x) for x in val)
        else:
            changes[key] = val
    try:
        return dataclasses.replace(base, **changes)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid config: {e}") from e


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return config_from_dict(doc)


def _json_value(x):
    # NaN/inf are not JSON; keep files strictly valid
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def summary_dict(result: SimResult) -> dict:
    d = dataclasses.asdict(result.summary)
    return {k: _json_value(v) for k, v in d.items()}


SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ohjb mission summary",
    "type": "object",
    "required": ["status", "algo", "seed", "power_control", "reached", "travel_time", "final_time",
                 "final_energy", "switch_time", "rounds_total", "rounds_delivered", "dn",
                 "up_bytes", "final_weights"],
    "properties": {
        "status": {"enum": ["reached", "timed_out", "diverged"]},
        "algo": {"enum": ["ahjb", "mhjb", "ohjb"]},
        "seed": {"type": "integer"},
        "power_control": {"type": "boolean"},
        "reached": {"type": "boolean"},
        "travel_time": {"type": ["number", "null"], "minimum": 0},
        "final_time": {"type": "number", "minimum": 0},
        "final_energy": {"type": "number", "minimum": 0},
        "switch_time": {"type": ["number", "null"], "minimum": 0},
        "switch_round": {"type": ["integer", "null"]},
        "switch_dn": {"type": ["integer", "null"]},
        "switch_window_mean": {"type": ["number", "null"]},
        "rounds_total": {"type": "integer", "minimum": 0},
        "rounds_delivered": {"type": "integer", "minimum": 0},
        "dn": {"type": "integer", "minimum": 0},
        "up_bytes": {"type": "integer", "minimum": 0},
        "final_weights": {"type": "array", "items": {"type": "number"},
                          "minItems": 54, "maxItems": 54},
    },
    "additionalProperties": False,
}


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_summary(result: SimResult, path) -> None:
    write_json(summary_dict(result), path)


def _cell(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_series_csv(result: SimResult, path) -> None:
    ser = result.series
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ser.COLUMNS)
        for row in ser.rows():
            w.writerow([_cell(x) for x in row])


def read_series_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [r[k] for r in rows] for k in (rows[0] if rows else [])}


def emit_svg(result: SimResult, path, source=None) -> None:
    """Trajectory plot with source, destination and (oHJB) switch markers."""
    ser = result.series
    if len(ser) < 2:
        raise ValueError("need at least two series points to plot a trajectory")
    import matplotlib
    matplotlib.use("agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "ohjb"
    src = (ser.x[0], ser.y[0]) if source is None else tuple(source)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(ser.x, ser.y, "-", lw=1.2, color="C0", label=result.summary.algo, gid="path")
    ax.plot([src[0]], [src[1]], "s", color="k", label="source", gid="source")
    ax.plot([0.0], [0.0], "*", ms=12, color="C3", label="destination", gid="destination")
    t_sw = result.summary.switch_time
    if t_sw is not None:
        i = int(np.argmin(np.abs(np.asarray(ser.t) - t_sw)))
        ax.plot([ser.x[i]], [ser.y[i]], "o", mfc="none", ms=9, color="C2",
                label=f"switch t={t_sw:.1f}s", gid="switch")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
