"""Scenario runner.

Config files are flat ``key = value`` text with ``#`` comments::

    protocol = teleportation
    backend = fma
    r = 1.0
    eta = 0.95

``r`` is the protocol's resource squeezing (ancilla, GHZ triple or EPR
pairs); ``fma_r`` sets the FMA offline squeezing and defaults to ``r``.
``retention = exact`` demands strict identity retention when certifying.

Exit status: 0 on success, 1 on usage error, 2 when a coherent channel
fails certification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis
from .fma_qnd import FmaParams
from .protocols import PROTOCOLS, Fma, Ideal, ScenarioResult
from .quad_algebra import AXES

DEFAULT_DIGITS = 12
PRECISION_ENV = "CVC_PRECISION_DIGITS"


class ConfigError(ValueError):
    """Malformed or out-of-range configuration; the message names the key."""


@dataclass
class ScenarioConfig:
    protocol: str = "qnd_channel"
    backend: str = "ideal"
    r: float = 1.0
    eta: float = 1.0
    fma_r: float | None = None
    encode_r: float = 2.0
    p: float = 0.0
    x: float = 0.0
    format: str = "json"
    retention: str = "auto"

    def validate(self) -> ScenarioConfig:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol: unknown protocol {self.protocol!r} (choose from {', '.join(PROTOCOLS)})")
        if self.backend not in ("ideal", "fma"):
            raise ConfigError(f"backend: must be 'ideal' or 'fma', got {self.backend!r}")
        if self.retention not in ("auto", "exact", "approximate"):
            raise ConfigError(f"retention: must be auto, exact or approximate, got {self.retention!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format: must be 'json' or 'csv', got {self.format!r}")
        for key in ("r", "encode_r"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{key}: must be finite and >= 0, got {v}")
        if self.fma_r is not None and not (math.isfinite(self.fma_r) and self.fma_r >= 0):
            raise ConfigError(f"fma_r: must be finite and >= 0, got {self.fma_r}")
        if not (math.isfinite(self.eta) and 0 < self.eta <= 1):
            raise ConfigError(f"eta: must lie in (0, 1], got {self.eta}")
        for key in ("p", "x"):
            if not math.isfinite(getattr(self, key)):
                raise ConfigError(f"{key}: must be finite")
        return self

    def with_values(self, **values) -> ScenarioConfig:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(values)
        return ScenarioConfig(**data).validate()

    def backend_object(self):
        if self.backend == "fma":
            return Fma(FmaParams(self.eta, self.r if self.fma_r is None else self.fma_r))
        return Ideal()

    def params(self) -> dict[str, float]:
        out = {"r": self.r, "eta": self.eta}
        if self.backend == "fma":
            out["fma_r"] = self.r if self.fma_r is None else self.fma_r
        if self.protocol == "reduction_check":
            out.update(encode_r=self.encode_r, p=self.p, x=self.x)
        return out

    def run(self) -> ScenarioResult:
        backend = self.backend_object()
        retention = None if self.retention == "auto" else self.retention
        if self.protocol == "qnd_channel":
            return PROTOCOLS["qnd_channel"](self.r, backend, retention)
        if self.protocol == "ccaecc":
            return PROTOCOLS["ccaecc"](self.r, self.eta, retention or "approximate")
        if self.protocol == "superdense":
            return PROTOCOLS["superdense"](self.r, backend, None, retention)
        if self.protocol == "reduction_check":
            return PROTOCOLS["reduction_check"](self.p, self.x, self.encode_r, self.r, backend, retention)
        return PROTOCOLS["teleportation"](self.r, backend)


_FLOAT_KEYS = {"r", "eta", "fma_r", "encode_r", "p", "x"}
_STR_KEYS = {"protocol", "backend", "format", "retention"}


def _coerce(key: str, raw: str):
    if key in _STR_KEYS:
        return raw.strip()
    if key in _FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    raise ConfigError(f"{key}: unknown config key")


def parse_config(text: str) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, raw)
    return values


def parse_sweep(spec: str) -> tuple[str, list[float]]:
    """``key=start:stop:steps[:log]`` -> (key, grid)."""
    if "=" not in spec:
        raise ConfigError(f"sweep: expected key=start:stop:steps[:log], got {spec!r}")
    key, rng = (s.strip() for s in spec.split("=", 1))
    if key not in _FLOAT_KEYS:
        raise ConfigError(f"sweep: {key}: not a numeric config key")
    parts = rng.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "linear")):
        raise ConfigError(f"sweep: {key}: expected start:stop:steps[:log], got {rng!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"sweep: {key}: bad range {rng!r}") from None
    if steps < 1:
        raise ConfigError(f"sweep: {key}: steps must be >= 1")
    log = len(parts) == 4 and parts[3] == "log"
    if log and (start <= 0 or stop <= 0):
        raise ConfigError(f"sweep: {key}: log scale needs positive bounds")
    if steps == 1:
        return key, [start]
    grid = np.geomspace(start, stop, steps) if log else np.linspace(start, stop, steps)
    return key, [float(v) for v in grid]


# -- reports -----------------------------------------------------------------


def precision_digits() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_DIGITS
    try:
        digits = int(raw)
    except ValueError:
        raise ConfigError(f"{PRECISION_ENV}: expected an integer, got {raw!r}") from None
    if not 1 <= digits <= 17:
        raise ConfigError(f"{PRECISION_ENV}: must lie in 1..17")
    return digits


def _round(value, digits: int):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        v = float(value)
        if not math.isfinite(v):
            return str(v)
        v = float(f"{v:.{digits}g}")
        return 0.0 if v == 0 else v
    if isinstance(value, dict):
        return {str(k): _round(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v, digits) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _source_key(src) -> str:
    return f"{src.index}:{src.label}"


def report_dict(result: ScenarioResult, digits: int | None = None) -> dict:
    digits = precision_digits() if digits is None else digits
    reg = result.registry
    outputs = []
    for role in sorted(result.outputs):
        mode = result.outputs[role]
        for axis in AXES:
            expr = mode.quad(axis)
            outputs.append(
                {
                    "role": f"{role}.{axis}",
                    "coefficients": {f"{_source_key(reg[i])}.{a}": c for (i, a), c in expr.terms},
                    "offset": expr.offset,
                }
            )
    sources = [
        {
            "id": s.index,
            "label": s.label,
            "kind": s.kind.name,
            "r": s.kind.r,
            "x_var": s.kind.x_var,
            "p_var": s.kind.p_var,
            "group": s.group,
        }
        for s in reg
    ]
    channels = {
        name: {
            "axis": ch.axis,
            "residual_copy_moment": ch.residual_copy_moment,
            "residual_backaction_moment": ch.residual_backaction_moment,
            "epsilon": ch.epsilon,
            "epsilon_budget": ch.epsilon_budget,
            "identity_retained": ch.identity_retained,
            "retention": ch.retention,
            "retention_defect_moment": ch.retention_defect_moment,
            "canonical": ch.canonical,
            "mean_conditions_ok": ch.mean_conditions_ok,
            "definition_satisfied": ch.definition_satisfied,
        }
        for name, ch in result.channels.items()
    }
    report = {
        "protocol": result.protocol,
        "backend": result.backend.name,
        "params": dict(result.params),
        "outputs": outputs,
        "sources": sources,
        "moments": dict(result.moments),
        "oracle_moments": dict(result.oracle_moments),
        "channels": channels,
        "figures": {k: v for k, v in result.figures.items()},
        "checks": dict(result.checks),
        "engine_agreement": result.engine_agreement,
    }
    for key in ("epsilon", "delta", "F", "threshold_class"):
        if key in result.figures:
            report[key] = result.figures[key]
    if result.entanglement:
        report["entanglement"] = {
            name: {"x_moment": e.x_moment, "p_moment": e.p_moment, "entangled": e.entangled}
            for name, e in result.entanglement.items()
        }
    return _round(report, digits)


def summary_row(result: ScenarioResult) -> dict:
    row = {k: v for k, v in result.figures.items() if not isinstance(v, str)}
    row["engine_agreement"] = result.engine_agreement
    row["certified"] = all(ch.definition_satisfied for ch in result.channels.values())
    return row


def emit_report(results, fmt: str = "json", columns: Sequence[str] = ()) -> bytes:
    """Serialize a report dict (json) or a list of sweep rows (json or csv).

    CSV columns are ``columns`` followed by any other keys in first-seen
    order, so an empty table with known columns is a header-only file.
    """
    if fmt == "json":
        return (json.dumps(results, sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        rows = list(results)
        columns = list(columns)
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(row.get(k, "")) for k in columns})
        return buf.getvalue().encode()
    raise ConfigError(f"format: must be 'json' or 'csv', got {fmt!r}")


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def run_sweep(config: ScenarioConfig, sweeps: Sequence[tuple[str, list[float]]], digits: int) -> tuple[list[dict], bool]:
    grid = dict(sweeps)

    def protocol(**values):
        return config.with_values(**values).run()

    try:
        rows = analysis.sweep(protocol, grid, summarize=summary_row)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    certified = all(row["certified"] for row in rows)
    return [_round(row, digits) for row in rows], certified


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvc", description="Run coherent-communication scenarios.")
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--protocol", choices=sorted(PROTOCOLS), help="overrides the config")
    parser.add_argument("--out", type=Path, help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument(
        "--sweep",
        action="append",
        default=[],
        metavar="KEY=START:STOP:STEPS[:log]",
        help="sweep a parameter; repeat for a Cartesian grid",
    )
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config value")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values: dict[str, object] = {}
        if args.config is not None:
            try:
                values.update(parse_config(args.config.read_text()))
            except OSError as exc:
                raise ConfigError(f"config: cannot read {args.config}: {exc.strerror}") from None
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"set: expected KEY=VALUE, got {item!r}")
            key, raw = item.split("=", 1)
            values[key.strip()] = _coerce(key.strip(), raw)
        if args.protocol:
            values["protocol"] = args.protocol
        if args.format:
            values["format"] = args.format
        config = ScenarioConfig(**values).validate()
        sweeps = [parse_sweep(s) for s in args.sweep]
        digits = precision_digits()

        if sweeps:
            rows, ok = run_sweep(config, sweeps, digits)
            payload = emit_report(rows, config.format)
        else:
            try:
                result = config.run()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            report = report_dict(result, digits)
            ok = all(ch["definition_satisfied"] for ch in report["channels"].values())
            if config.format == "csv":
                payload = emit_report([_round(summary_row(result), digits)], "csv")
            else:
                payload = emit_report(report, "json")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out:
        args.out.write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    return 0 if ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
