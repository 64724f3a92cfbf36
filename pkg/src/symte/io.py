"""CSV readers and writers for tick files, symbol files and manifests.

Tick file: header with ``timestamp`` and ``price`` columns (decimal seconds
UTC, positive price); ``symbol`` and ``venue`` columns are optional.

Symbol file: a comment line carrying the alphabet size and label, then
``timestamp,state`` rows::

    # symte-symbols alphabet_size=2 label=ABX
    timestamp,state
    1.000000000,1

Manifest: ``path,label,group`` rows; relative paths resolve against the
manifest's directory.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .core import NS_PER_S, SymbolSeries, encode_sign_changes
from .errors import DataError

SYMBOL_MAGIC = "# symte-symbols"
DAY_NS = 86_400 * NS_PER_S


def parse_seconds(text: str) -> int:
    """Exact integer nanoseconds from a decimal seconds string."""
    text = text.strip()
    if not text:
        raise ValueError("empty timestamp")
    sign = -1 if text.startswith("-") else 1
    body = text.lstrip("+-")
    whole, _, frac = body.partition(".")
    if not (whole.isdigit() or (whole == "" and frac)) or (frac and not frac.isdigit()):
        raise ValueError(f"not a decimal number: {text!r}")
    if len(frac) > 9:
        if frac[9:].strip("0"):
            raise ValueError(f"timestamp finer than 1 ns: {text!r}")
        frac = frac[:9]
    return sign * (int(whole or 0) * NS_PER_S + int(frac.ljust(9, "0")))


def format_seconds(ns: int) -> str:
    sign = "-" if ns < 0 else ""
    ns = abs(int(ns))
    return f"{sign}{ns // NS_PER_S}.{ns % NS_PER_S:09d}"


def parse_clock(text: str) -> int:
    """Time of day ``HH:MM[:SS]`` or plain seconds after midnight, as ns."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        while len(parts) < 3:
            parts.append(0)
        h, m, s = parts
        return ((h * 60 + m) * 60 + s) * NS_PER_S
    return parse_seconds(text)


def _open_rows(path: Path):
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    return handle


def _lower_header(header):
    return [h.strip().lower() for h in header]


def read_ticks(path, session: Optional[Tuple[int, int]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Timestamps (ns) and prices from a tick file.

    ``session`` keeps only ticks whose UTC time of day lies in [start, end).
    """
    path = Path(path)
    times, prices = [], []
    with _open_rows(path) as handle:
        reader = csv.reader(handle)
        try:
            header = _lower_header(next(reader))
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if "timestamp" not in header or "price" not in header:
            raise DataError(f"{path}:1: header must contain 'timestamp' and 'price'")
        it, ip = header.index("timestamp"), header.index("price")
        last = None
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            try:
                ts = parse_seconds(row[it])
                price = float(row[ip])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{line}: malformed row ({exc})") from None
            if not price > 0:
                raise DataError(f"{path}:{line}: price must be positive")
            if last is not None and ts < last:
                raise DataError(f"{path}:{line}: timestamp decreases")
            last = ts
            times.append(ts)
            prices.append(price)
    times = np.asarray(times, dtype=np.int64)
    prices = np.asarray(prices, dtype=float)
    if session is not None:
        tod = times % DAY_NS
        keep = (tod >= session[0]) & (tod < session[1])
        times, prices = times[keep], prices[keep]
    return times, prices


def symbols_text(series: SymbolSeries) -> str:
    buf = io.StringIO()
    buf.write(f"{SYMBOL_MAGIC} alphabet_size={series.alphabet_size} label={series.label}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", "state"])
    for ns, s in zip(series.times_ns.tolist(), series.symbols.tolist()):
        w.writerow([format_seconds(ns), s])
    return buf.getvalue()


def write_symbols(series: SymbolSeries, path) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(symbols_text(series))


def read_symbols(path) -> SymbolSeries:
    path = Path(path)
    with _open_rows(path) as handle:
        first = handle.readline()
        if not first.startswith(SYMBOL_MAGIC):
            raise DataError(f"{path}:1: not a symbol file")
        meta = first[len(SYMBOL_MAGIC):].strip()
        alpha_part, _, label_part = meta.partition(" label=")
        try:
            alphabet = int(alpha_part.split("=", 1)[1])
        except (IndexError, ValueError):
            raise DataError(f"{path}:1: missing alphabet_size") from None
        reader = csv.reader(handle)
        header = _lower_header(next(reader, []))
        if header != ["timestamp", "state"]:
            raise DataError(f"{path}:2: header must be 'timestamp,state'")
        times, states = [], []
        last = None
        for row in reader:
            line = reader.line_num + 1
            if not row:
                continue
            try:
                ts, st = parse_seconds(row[0]), int(row[1])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{line}: malformed row ({exc})") from None
            if last is not None and ts < last:
                raise DataError(f"{path}:{line}: timestamp decreases")
            if not 0 <= st < alphabet:
                raise DataError(f"{path}:{line}: state {st} outside alphabet {alphabet}")
            last = ts
            times.append(ts)
            states.append(st)
    return SymbolSeries(np.asarray(times, np.int64), np.asarray(states, np.int64), alphabet,
                        label_part.rstrip("\n"))


def is_symbol_file(path) -> bool:
    try:
        with open(path) as handle:
            return handle.readline().startswith(SYMBOL_MAGIC)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc


def load_series(path, label: Optional[str] = None, session=None) -> SymbolSeries:
    """Symbol series from a symbol file, or by sign-encoding a tick file."""
    path = Path(path)
    label = label if label is not None else path.stem
    if is_symbol_file(path):
        series = read_symbols(path)
        return SymbolSeries(series.times_ns, series.symbols, series.alphabet_size, label)
    times, prices = read_ticks(path, session)
    try:
        return encode_sign_changes(times, prices, label=label, unit="ns")
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: str
    group: str


def read_manifest(path) -> List[ManifestEntry]:
    path = Path(path)
    entries = []
    with _open_rows(path) as handle:
        reader = csv.reader(handle)
        header = _lower_header(next(reader, []))
        if header[:3] != ["path", "label", "group"]:
            raise DataError(f"{path}:1: manifest header must be 'path,label,group'")
        seen = set()
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) < 3 or not row[0].strip() or not row[1].strip():
                raise DataError(f"{path}:{line}: manifest entry needs path, label and group")
            p, label, group = (c.strip() for c in row[:3])
            if label in seen:
                raise DataError(f"{path}:{line}: duplicate label {label!r}")
            seen.add(label)
            target = Path(p)
            if not target.is_absolute():
                target = path.parent / target
            entries.append(ManifestEntry(target, label, group))
    if not entries:
        raise DataError(f"{path}: manifest lists no series")
    return entries
