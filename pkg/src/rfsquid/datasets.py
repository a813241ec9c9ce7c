"""Datasets and their CSV formats.

Spectroscopy CSV columns: ``phi_ext,freq_ghz,label,weight,kind``. Labels use
the vocabulary ``q:0-1``, ``q:0-2``, ``q:0-1+1ph`` (qubit transition with one
extra resonator photon) and ``r:disp`` (resonator line); an empty label
means the point is matched to the nearest model line. Comment lines starting
with ``#`` carry metadata as ``# key: value``.

Coherence CSV: ``phi_ext,value_us,err_us``. Number-splitting traces:
``freq_ghz,amplitude``, one file per drive power. Admittance samples:
``freq_ghz,re_y,im_y`` in siemens.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

QUBIT_LINE = "qubit-line"
RESONATOR_LINE = "resonator-line"
UNASSIGNED = "unassigned"

_LABEL_RE = re.compile(r"^q:(\d+)-(\d+)(?:\+(\d+)ph)?$")


class DatasetError(ValueError):
    """Dataset failed validation; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class LineLabel:
    """Parsed transition tag: qubit i -> j with ``photons`` extra resonator quanta,
    or the resonator line (``resonator=True``)."""

    i: int = 0
    j: int = 1
    photons: int = 0
    resonator: bool = False

    @classmethod
    def parse(cls, text: str) -> LineLabel | None:
        text = (text or "").strip()
        if text in ("", UNASSIGNED):
            return None
        if text == "r:disp":
            return cls(0, 0, 1, resonator=True)
        m = _LABEL_RE.match(text)
        if not m:
            raise ValueError(f"unknown transition label {text!r}")
        i, j, k = int(m.group(1)), int(m.group(2)), int(m.group(3) or 0)
        if j <= i:
            raise ValueError(f"label {text!r} must go upward in energy")
        return cls(i, j, k)

    def __str__(self):
        if self.resonator:
            return "r:disp"
        tail = f"+{self.photons}ph" if self.photons else ""
        return f"q:{self.i}-{self.j}{tail}"


@dataclass(frozen=True)
class SpectroscopyPoint:
    phi_ext: float
    freq: float
    label: str = UNASSIGNED
    weight: float = 1.0
    kind: str = QUBIT_LINE

    @property
    def line(self) -> LineLabel | None:
        return LineLabel.parse(self.label)


@dataclass
class SpectroscopyDataset:
    points: list[SpectroscopyPoint]
    meta: dict = field(default_factory=dict)

    def problems(self) -> list[str]:
        out = []
        if not self.points:
            out.append("dataset is empty")
        for n, p in enumerate(self.points):
            where = f"point {n}"
            if not math.isfinite(p.phi_ext):
                out.append(f"{where}: phi_ext not finite")
            if not (math.isfinite(p.freq) and p.freq > 0):
                out.append(f"{where}: freq must be positive")
            if not (math.isfinite(p.weight) and p.weight > 0):
                out.append(f"{where}: weight must be positive")
            if p.kind not in (QUBIT_LINE, RESONATOR_LINE):
                out.append(f"{where}: unknown kind {p.kind!r}")
            try:
                lab = p.line
            except ValueError as exc:
                out.append(f"{where}: {exc}")
            else:
                if lab is not None and lab.resonator != (p.kind == RESONATOR_LINE):
                    out.append(f"{where}: label {p.label!r} inconsistent with kind {p.kind!r}")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise DatasetError(problems)
        return self

    def select(self, kind: str) -> SpectroscopyDataset:
        return SpectroscopyDataset([p for p in self.points if p.kind == kind], dict(self.meta))

    def scaled_weights(self, factor: float) -> SpectroscopyDataset:
        from dataclasses import replace

        return SpectroscopyDataset([replace(p, weight=p.weight * factor) for p in self.points], dict(self.meta))

    @property
    def flux_values(self) -> list[float]:
        return sorted({p.phi_ext for p in self.points})

    @property
    def max_photon_replicas(self) -> int:
        return int(self.meta.get("max_photon_replicas", 0))


def _format(x: float) -> str:
    return repr(float(x))


def read_spectroscopy_csv(path) -> SpectroscopyDataset:
    text = Path(path).read_text()
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                meta[key.strip()] = _meta_value(value.strip())
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    expected = ["phi_ext", "freq_ghz", "label", "weight", "kind"]
    if reader.fieldnames != expected:
        raise DatasetError([f"expected columns {','.join(expected)}, got {reader.fieldnames}"])
    points, problems = [], []
    for n, row in enumerate(reader):
        try:
            points.append(
                SpectroscopyPoint(
                    phi_ext=float(row["phi_ext"]),
                    freq=float(row["freq_ghz"]),
                    label=row["label"].strip() or UNASSIGNED,
                    weight=float(row["weight"]) if row["weight"].strip() else 1.0,
                    kind=row["kind"].strip() or QUBIT_LINE,
                )
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"row {n}: {exc}")
    if problems:
        raise DatasetError(problems)
    return SpectroscopyDataset(points, meta)


def _meta_value(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_spectroscopy_csv(dataset: SpectroscopyDataset, path):
    lines = [f"# {k}: {v}" for k, v in sorted(dataset.meta.items())]
    lines.append("phi_ext,freq_ghz,label,weight,kind")
    for p in dataset.points:
        label = "" if p.label == UNASSIGNED else p.label
        lines.append(f"{_format(p.phi_ext)},{_format(p.freq)},{label},{_format(p.weight)},{p.kind}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_numeric(path, columns):
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        if [h.strip() for h in header] != columns:
            raise DatasetError([f"{path}: expected columns {','.join(columns)}, got {','.join(header)}"])
        rows = [[float(v) for v in row] for row in reader if row]
    return np.array(rows, dtype=float).reshape(-1, len(columns))


def read_coherence_csv(path):
    """Returns arrays (phi_ext, value_us, err_us)."""
    data = _read_numeric(path, ["phi_ext", "value_us", "err_us"])
    return data[:, 0], data[:, 1], data[:, 2]


def write_coherence_csv(path, phi_ext, value_us, err_us):
    lines = ["phi_ext,value_us,err_us"]
    lines += [f"{_format(a)},{_format(b)},{_format(c)}" for a, b, c in zip(phi_ext, value_us, err_us)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path):
    data = _read_numeric(path, ["freq_ghz", "amplitude"])
    return data[:, 0], data[:, 1]


def write_trace_csv(path, freq_ghz, amplitude):
    lines = ["freq_ghz,amplitude"] + [f"{_format(f)},{_format(a)}" for f, a in zip(freq_ghz, amplitude)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_admittance_csv(path):
    """Returns (freq_ghz, complex admittance in siemens)."""
    data = _read_numeric(path, ["freq_ghz", "re_y", "im_y"])
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def write_admittance_csv(path, freq_ghz, y):
    lines = ["freq_ghz,re_y,im_y"]
    lines += [f"{_format(f)},{_format(v.real)},{_format(v.imag)}" for f, v in zip(freq_ghz, y)]
    Path(path).write_text("\n".join(lines) + "\n")
