"""On-disk formats: MSR matrices, maps (CSV/PGM), spectra, reports, Fresnel ASCII."""

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .forward import MatrixKind, MSRMatrix
from .music import ImagingMap
from .scene import (ArrayConfig, ROIGrid, VACUUM_PERMEABILITY, VACUUM_PERMITTIVITY,
                    FRESNEL_RX_STEP_DEG, FRESNEL_TX_STEP_DEG, directions_from_angles,
                    fresnel_angles, fresnel_mask)

MSR_MAGIC = "# dfmusic-msr 1"
MAP_MAGIC = "# dfmusic-map 1"


def config_hash(obj):
    """sha256 of the canonical JSON form of ``obj`` (or of raw bytes/str)."""
    if isinstance(obj, bytes):
        data = obj
    elif isinstance(obj, str):
        data = obj.encode()
    else:
        data = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(data).hexdigest()


def header_block(config_sha, seed, extra=()):
    lines = [f"# artifact_version: {__version__}",
             f"# config_sha256: {config_sha}",
             f"# seed: {'none' if seed is None else int(seed)}"]
    lines += [f"# {k}: {v}" for k, v in extra]
    return lines


def _parse_header(lines):
    meta = {}
    for line in lines:
        body = line[1:].strip()
        key, sep, value = body.partition(":")
        if sep:
            meta.setdefault(key.strip(), value.strip())
    return meta


def _f(x):
    return repr(float(x))


# ------------------------------------------------------------------ MSR files

def format_msr(msr, config_sha="none"):
    n_rx, n_tx = msr.shape
    lines = [MSR_MAGIC]
    lines += header_block(config_sha, msr.seed, [
        ("shape", f"{n_rx} {n_tx}"),
        ("frequency", _f(msr.frequency)),
        ("wavenumber", _f(msr.wavenumber)),
        ("kind", msr.kind.value),
    ])
    for i, (x, y) in enumerate(msr.array.incident, 1):
        lines.append(f"# incident {i} {_f(x)} {_f(y)}")
    for i, (x, y) in enumerate(msr.array.observation, 1):
        lines.append(f"# observation {i} {_f(x)} {_f(y)}")
    lines.append("# columns: m n re im mask (1-based receiver m, transmitter n)")
    for m in range(n_rx):
        for n in range(n_tx):
            v = msr.entries[m, n]
            lines.append(f"{m + 1} {n + 1} {_f(v.real)} {_f(v.imag)} {int(msr.mask[m, n])}")
    return "\n".join(lines) + "\n"


def write_msr(path, msr, config_sha="none"):
    Path(path).write_text(format_msr(msr, config_sha))


def parse_msr(text, source="<string>"):
    lines = text.splitlines()
    if not lines or lines[0].strip() != MSR_MAGIC:
        raise ValueError(f"{source}: not an MSR matrix file")
    header = [ln for ln in lines if ln.startswith("#")]
    meta = _parse_header(header)
    try:
        n_rx, n_tx = (int(v) for v in meta["shape"].split())
        frequency = float(meta["frequency"])
        k = float(meta["wavenumber"])
        kind = MatrixKind(meta["kind"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{source}: bad MSR header ({exc})") from exc
    seed = None if meta.get("seed", "none") == "none" else int(meta["seed"])
    inc = np.zeros((n_tx, 2))
    obs = np.zeros((n_rx, 2))
    for ln in header:
        parts = ln[1:].split()
        if len(parts) == 4 and parts[0] in ("incident", "observation"):
            target = inc if parts[0] == "incident" else obs
            target[int(parts[1]) - 1] = (float(parts[2]), float(parts[3]))
    entries = np.zeros((n_rx, n_tx), dtype=complex)
    mask = np.zeros((n_rx, n_tx), dtype=bool)
    seen = 0
    for lineno, ln in enumerate(lines, 1):
        if not ln.strip() or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 5:
            raise ValueError(f"{source}:{lineno}: expected 'm n re im mask'")
        try:
            m, n = int(parts[0]) - 1, int(parts[1]) - 1
            entries[m, n] = complex(float(parts[2]), float(parts[3]))
            mask[m, n] = bool(int(parts[4]))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from exc
        seen += 1
    if seen != n_rx * n_tx:
        raise ValueError(f"{source}: expected {n_rx * n_tx} entries, found {seen}")
    array = ArrayConfig(inc, obs, mask)
    return MSRMatrix(entries, mask, kind, array, frequency, k, seed), meta


def read_msr(path):
    return parse_msr(Path(path).read_text(), str(path))[0]


# ------------------------------------------------------------------ maps

def format_map_csv(imap, config_sha="none", seed=None):
    g = imap.grid
    lines = [MAP_MAGIC]
    lines += header_block(config_sha, seed, [
        ("grid", " ".join(_f(v) for v in (g.x_min, g.x_max, g.y_min, g.y_max)) + f" {g.nx} {g.ny}"),
        ("peak_cap", _f(imap.peak_cap)),
        ("metadata", json.dumps(imap.metadata, sort_keys=True)),
        ("layout", "pixel centers, row-major, x fastest"),
    ])
    lines.append("x,y,value")
    pts = g.points()
    for (x, y), v in zip(pts, imap.values.ravel()):
        lines.append(f"{_f(x)},{_f(y)},{_f(v)}")
    return "\n".join(lines) + "\n"


def write_map_csv(path, imap, config_sha="none", seed=None):
    Path(path).write_text(format_map_csv(imap, config_sha, seed))


def read_map_csv(path):
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAP_MAGIC:
        raise ValueError(f"{path}: not a map file")
    meta = _parse_header([ln for ln in lines if ln.startswith("#")])
    parts = meta["grid"].split()
    grid = ROIGrid(*(float(v) for v in parts[:4]), int(parts[4]), int(parts[5]))
    rows = [ln for ln in lines if ln and not ln.startswith("#")][1:]
    if len(rows) != grid.nx * grid.ny:
        raise ValueError(f"{path}: expected {grid.nx * grid.ny} pixels, found {len(rows)}")
    values = np.array([float(r.rsplit(",", 1)[1]) for r in rows]).reshape(grid.ny, grid.nx)
    return ImagingMap(grid, values, float(meta["peak_cap"]), json.loads(meta["metadata"]))


def pgm_bytes(imap, config_sha="none", seed=None):
    """8-bit binary PGM, per-map min-max normalized, top row = largest y."""
    v = imap.values
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)
    pixels = np.round(scaled * 255).astype(np.uint8)[::-1]
    comments = header_block(config_sha, seed, [
        ("normalization", f"per-map min-max, min {_f(lo)} max {_f(hi)}"),
    ])
    head = "P5\n" + "\n".join(comments) + f"\n{imap.grid.nx} {imap.grid.ny}\n255\n"
    return head.encode("ascii") + pixels.tobytes()


def write_pgm(path, imap, config_sha="none", seed=None):
    Path(path).write_bytes(pgm_bytes(imap, config_sha, seed))


def read_pgm(path):
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        end = data.index(b"\n", pos)
        line = data[pos:end]
        pos = end + 1
        if line.startswith(b"#"):
            continue
        tokens += line.split()
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


def write_spectrum_csv(path, singular_values, config_sha="none", seed=None):
    s = np.asarray(singular_values, dtype=float)
    lines = header_block(config_sha, seed) + ["n,sigma,sigma_normalized"]
    lines += [f"{i},{_f(v)},{_f(v / s[0])}" for i, v in enumerate(s, 1)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum_csv(path):
    rows = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")][1:]
    return np.array([[float(x) for x in r.split(",")] for r in rows])


def write_report(stem, report, config_sha="none", seed=None):
    """Write ``stem.txt`` (key: value) and ``stem.csv`` (metric,value)."""
    stem = Path(stem)
    head = header_block(config_sha, seed)
    text = head + [f"{k}: {v}" for k, v in report.items()]
    stem.with_suffix(".txt").write_text("\n".join(text) + "\n")
    csv = head + ["metric,value"] + [f"{k},{v}" for k, v in report.items()]
    stem.with_suffix(".csv").write_text("\n".join(csv) + "\n")


# ------------------------------------------------------------------ Fresnel ASCII

DEFAULT_COLUMNS = {"tx_deg": 0, "rx_deg": 1, "freq_hz": 2,
                   "tot_re": 3, "tot_im": 4, "inc_re": 5, "inc_im": 6}


@dataclass(frozen=True)
class ColumnMap:
    columns: dict = field(default_factory=lambda: dict(DEFAULT_COLUMNS))
    header_lines: int = 0
    comment: str = "#"
    frequency_scale: float = 1.0  # multiplies the frequency column into Hz
    delimiter: str = None        # None = any whitespace

    def __post_init__(self):
        missing = set(DEFAULT_COLUMNS) - set(self.columns)
        if missing:
            raise ValueError(f"column map lacks {sorted(missing)}")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        cols = dict(DEFAULT_COLUMNS)
        cols.update(d.pop("columns", {}))
        return cls(columns=cols, **d)


@dataclass(frozen=True)
class FresnelRecord:
    tx_deg: float
    rx_deg: float
    frequency: float
    total: complex
    incident: complex

    @property
    def scattered(self):
        return self.total - self.incident


def parse_fresnel(text, columns=ColumnMap(), source="<string>"):
    records = []
    lines = text.splitlines()
    for lineno, line in enumerate(lines, 1):
        if lineno <= columns.header_lines:
            continue
        stripped = line.strip()
        if not stripped or (columns.comment and stripped.startswith(columns.comment)):
            continue
        parts = stripped.split(columns.delimiter)
        c = columns.columns
        try:
            rec = FresnelRecord(
                float(parts[c["tx_deg"]]) % 360.0, float(parts[c["rx_deg"]]) % 360.0,
                float(parts[c["freq_hz"]]) * columns.frequency_scale,
                complex(float(parts[c["tot_re"]]), float(parts[c["tot_im"]])),
                complex(float(parts[c["inc_re"]]), float(parts[c["inc_im"]])),
            )
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{source}:{lineno}: malformed record ({exc})") from exc
        records.append(rec)
    return records


def fresnel_records_to_msr(records, epsilon_b=VACUUM_PERMITTIVITY, mu_b=VACUUM_PERMEABILITY,
                           expect_layout=True, source="<records>"):
    """Group records per frequency into 72 x 36 masked scattered-field matrices."""
    tx_all, rx_all = fresnel_angles()
    inc, obs = directions_from_angles(tx_all, rx_all)
    expected_mask = fresnel_mask(tx_all, rx_all)
    by_freq = {}
    for i, r in enumerate(records):
        if r.tx_deg % FRESNEL_TX_STEP_DEG or r.rx_deg % FRESNEL_RX_STEP_DEG:
            raise ValueError(f"{source}: record {i + 1} angle off lattice (tx {r.tx_deg}, rx {r.rx_deg})")
        by_freq.setdefault(r.frequency, []).append(r)
    out = {}
    for freq in sorted(by_freq):
        entries = np.zeros(expected_mask.shape, dtype=complex)
        mask = np.zeros(expected_mask.shape, dtype=bool)
        for r in by_freq[freq]:
            m, n = int(r.rx_deg) // FRESNEL_RX_STEP_DEG, int(r.tx_deg) // FRESNEL_TX_STEP_DEG
            if mask[m, n]:
                raise ValueError(f"{source}: duplicate record tx {r.tx_deg} rx {r.rx_deg} f {freq}")
            entries[m, n] = r.scattered
            mask[m, n] = True
        if expect_layout and not np.array_equal(mask, expected_mask):
            raise ValueError(
                f"{source}: frequency {freq:g} Hz has {int(mask.sum())} records, "
                f"expected the {int(expected_mask.sum())}-record restricted-aperture layout")
        k = 2.0 * math.pi * freq * math.sqrt(epsilon_b * mu_b)
        out[freq] = MSRMatrix(entries, mask, MatrixKind.BISTATIC, ArrayConfig(inc, obs, mask), freq, k)
    return out


def read_fresnel(path, columns=ColumnMap(), **kwargs):
    records = parse_fresnel(Path(path).read_text(), columns, str(path))
    return fresnel_records_to_msr(records, source=str(path), **kwargs)


RECEIVER_RADIUS = 1.67  # m, only shapes the synthetic incident field


def fresnel_records(msrs):
    """Records for bistatic matrices; total field = scattered + a unit plane wave
    sampled at the receiver (ingestion subtracts it back)."""
    tx_all, rx_all = fresnel_angles()
    records = []
    for msr in msrs:
        for n, t in enumerate(tx_all):
            for m, r in enumerate(rx_all):
                if not msr.mask[m, n]:
                    continue
                cos_angle = float(msr.array.incident[n] @ msr.array.observation[m])
                inc = complex(np.exp(1j * msr.wavenumber * RECEIVER_RADIUS * cos_angle))
                records.append(FresnelRecord(float(t), float(r), msr.frequency,
                                             msr.entries[m, n] + inc, inc))
    return records


def format_fresnel(records, config_sha="none", seed=None):
    """Default column layout: tx_deg rx_deg freq_hz tot_re tot_im inc_re inc_im."""
    lines = header_block(config_sha, seed, [
        ("columns", "tx_deg rx_deg freq_hz tot_re tot_im inc_re inc_im"),
    ])
    return "\n".join(lines) + "\n" + format_records(records)


def format_records(records):
    return "\n".join(
        " ".join([_f(r.tx_deg), _f(r.rx_deg), _f(r.frequency), _f(r.total.real),
                  _f(r.total.imag), _f(r.incident.real), _f(r.incident.imag)])
        for r in records) + "\n"
