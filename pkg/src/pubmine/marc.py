"""MARC21 record ingestion.

Reads bibliographic records from ISO 2709 binary files (streamed, never
fully buffered) or from a line-delimited JSON representation, and extracts
raw publisher place/name pairs from field 260 ($a = place, $b = name).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, TextIO, Union

FIELD_TERMINATOR = 0x1E
RECORD_TERMINATOR = 0x1D
SUBFIELD_DELIMITER = 0x1F

LEADER_LEN = 24
DIR_ENTRY_LEN = 12

# Minimal valid leader for records built from JSON fixtures (byte 9 = 'a'
# marks UTF-8 encoding; length and base address get patched on write).
DEFAULT_LEADER = "00000nam a2200000   4500"

PAIRS_CSV_HEADER = ("record_id", "place", "name")


class MarcSerializationError(ValueError):
    """Record cannot be written as a valid ISO 2709 record."""


class _MalformedRecord(ValueError):
    """Internal: structural damage inside one record; skip and resync."""


@dataclass(frozen=True)
class ControlField:
    tag: str
    value: str


@dataclass(frozen=True)
class DataField:
    tag: str
    indicators: str
    subfields: tuple[tuple[str, str], ...]


MarcField = Union[ControlField, DataField]


@dataclass(frozen=True)
class MarcRecord:
    """Parsed view of one record: 24-char leader plus directory-ordered fields."""

    leader: str
    fields: tuple[MarcField, ...]

    def control_value(self, tag: str) -> str | None:
        for f in self.fields:
            if isinstance(f, ControlField) and f.tag == tag:
                return f.value
        return None

    def data_fields(self, tag: str) -> list[DataField]:
        return [f for f in self.fields if isinstance(f, DataField) and f.tag == tag]


@dataclass(frozen=True)
class RawPublisherPair:
    """Verbatim 260 $a/$b contents, no cleaning applied."""

    place: str
    name: str
    record_id: str


@dataclass
class ParseDiagnostics:
    """Counters accumulated while parsing a record stream."""

    records_read: int = 0
    records_skipped: int = 0
    encoding_fallbacks: int = 0
    truncated: bool = False
    messages: list[str] = field(default_factory=list)

    _MAX_MESSAGES = 50

    def note(self, message: str) -> None:
        if len(self.messages) < self._MAX_MESSAGES:
            self.messages.append(message)


def _is_control_tag(tag: str) -> bool:
    # MARC21 convention: tags 001-009 carry undifferentiated data.
    return tag.startswith("00")


class _ByteScanner:
    """Buffered reader with pushback, so parsing can resync after damage."""

    def __init__(self, stream: BinaryIO, chunk_size: int = 64 * 1024):
        self._stream = stream
        self._chunk_size = chunk_size
        self._buffer = b""
        self.offset = 0  # bytes consumed from the underlying stream position

    def read(self, n: int) -> bytes:
        while len(self._buffer) < n:
            chunk = self._stream.read(self._chunk_size)
            if not chunk:
                break
            self._buffer += chunk
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        self.offset += len(out)
        return out

    def push_back(self, data: bytes) -> None:
        self._buffer = data + self._buffer
        self.offset -= len(data)

    def skip_past(self, marker: int) -> bool:
        """Discard bytes up to and including the next `marker` byte."""
        while True:
            if not self._buffer:
                chunk = self._stream.read(self._chunk_size)
                if not chunk:
                    return False
                self._buffer = chunk
            i = self._buffer.find(marker)
            if i >= 0:
                self.offset += i + 1
                self._buffer = self._buffer[i + 1 :]
                return True
            self.offset += len(self._buffer)
            self._buffer = b""


def _decode_fields(raw_fields: list[tuple[str, bytes]], utf8: bool) -> tuple[list[tuple[str, str]], bool]:
    """Decode field payloads; returns (decoded, fallback_used)."""
    decoded = []
    fallback = False
    for tag, payload in raw_fields:
        if utf8:
            try:
                decoded.append((tag, payload.decode("utf-8")))
                continue
            except UnicodeDecodeError:
                fallback = True
        else:
            fallback = True
        decoded.append((tag, payload.decode("latin-1")))
    return decoded, fallback


def _parse_record_bytes(data: bytes) -> tuple[MarcRecord, bool]:
    """Parse one complete record buffer. Returns (record, encoding_fallback)."""
    if len(data) < LEADER_LEN + 2 or data[-1] != RECORD_TERMINATOR:
        raise _MalformedRecord("missing record terminator")
    leader_bytes = data[:LEADER_LEN]
    base_digits = leader_bytes[12:17]
    if not base_digits.isdigit():
        raise _MalformedRecord("non-numeric base address")
    base = int(base_digits)
    if base <= LEADER_LEN or base >= len(data) or data[base - 1] != FIELD_TERMINATOR:
        raise _MalformedRecord("bad base address")
    directory = data[LEADER_LEN : base - 1]
    if len(directory) % DIR_ENTRY_LEN != 0:
        raise _MalformedRecord("directory length not a multiple of 12")

    raw_fields: list[tuple[str, bytes]] = []
    for i in range(0, len(directory), DIR_ENTRY_LEN):
        entry = directory[i : i + DIR_ENTRY_LEN]
        tag = entry[:3]
        length_digits = entry[3:7]
        start_digits = entry[7:12]
        if not (length_digits.isdigit() and start_digits.isdigit()):
            raise _MalformedRecord("non-numeric directory entry")
        start = base + int(start_digits)
        end = start + int(length_digits)
        if end > len(data) or data[end - 1] != FIELD_TERMINATOR:
            raise _MalformedRecord(f"field {tag.decode('latin-1')} out of bounds")
        raw_fields.append((tag.decode("latin-1"), data[start : end - 1]))

    leader = leader_bytes.decode("latin-1")
    utf8 = len(leader) > 9 and leader[9] == "a"
    decoded, fallback = _decode_fields(raw_fields, utf8)

    fields: list[MarcField] = []
    for tag, content in decoded:
        if _is_control_tag(tag):
            fields.append(ControlField(tag, content))
        else:
            parts = content.split(chr(SUBFIELD_DELIMITER))
            indicators = parts[0][:2].ljust(2)
            if len(parts[0]) > 2:
                raise _MalformedRecord(f"field {tag}: data before first subfield")
            subfields = tuple((p[0], p[1:]) for p in parts[1:] if p)
            fields.append(DataField(tag, indicators, subfields))
    return MarcRecord(leader, tuple(fields)), fallback


def parse_iso2709(stream: BinaryIO, diagnostics: ParseDiagnostics | None = None) -> Iterator[MarcRecord]:
    """Stream-parse concatenated ISO 2709 records.

    Malformed records are skipped (counted in ``diagnostics.records_skipped``)
    and parsing resumes right after the next record terminator.  A truncated
    final record produces a partial-record diagnostic and a clean end.
    """
    diag = diagnostics if diagnostics is not None else ParseDiagnostics()
    scanner = _ByteScanner(stream)
    while True:
        start = scanner.offset
        head = scanner.read(5)
        if not head:
            return
        if len(head) < 5:
            diag.truncated = True
            diag.note(f"offset {start}: partial record, truncated stream")
            return
        if not head.isdigit():
            diag.records_skipped += 1
            diag.note(f"offset {start}: non-numeric record length")
            i = head.find(RECORD_TERMINATOR)
            if i >= 0:
                scanner.push_back(head[i + 1 :])
            elif not scanner.skip_past(RECORD_TERMINATOR):
                return
            continue
        length = int(head)
        body = scanner.read(length - 5)
        if len(body) < length - 5:
            diag.truncated = True
            diag.note(f"offset {start}: partial record, truncated stream")
            return
        data = head + body
        try:
            record, fallback = _parse_record_bytes(data)
        except _MalformedRecord as exc:
            diag.records_skipped += 1
            diag.note(f"offset {start}: {exc}")
            i = data.find(RECORD_TERMINATOR, 5)
            if i >= 0:
                scanner.push_back(data[i + 1 :])
            elif not scanner.skip_past(RECORD_TERMINATOR):
                return
            continue
        diag.records_read += 1
        if fallback:
            diag.encoding_fallbacks += 1
        yield record


def write_iso2709(record: MarcRecord) -> bytes:
    """Serialize a record back to ISO 2709 bytes (inverse of parse_iso2709)."""
    if len(record.leader) != LEADER_LEN:
        raise MarcSerializationError(f"leader must be {LEADER_LEN} characters")
    utf8 = record.leader[9] == "a"
    encoding = "utf-8" if utf8 else "latin-1"
    ft = bytes([FIELD_TERMINATOR])
    sd = bytes([SUBFIELD_DELIMITER])

    payloads: list[tuple[str, bytes]] = []
    for f in record.fields:
        if isinstance(f, ControlField):
            payloads.append((f.tag, f.value.encode(encoding)))
        else:
            body = f.indicators.encode(encoding) + b"".join(
                sd + code.encode(encoding) + value.encode(encoding) for code, value in f.subfields
            )
            payloads.append((f.tag, body))

    directory = bytearray()
    data = bytearray()
    for tag, payload in payloads:
        start = len(data)
        data += payload + ft
        length = len(payload) + 1
        if length > 9999 or start > 99999:
            raise MarcSerializationError(f"field {tag} exceeds ISO 2709 size limits")
        directory += f"{tag:>3.3}{length:04d}{start:05d}".encode("ascii")

    base = LEADER_LEN + len(directory) + 1
    total = base + len(data) + 1
    if total > 99999:
        raise MarcSerializationError("record exceeds 99999 bytes")
    leader = f"{total:05d}" + record.leader[5:12] + f"{base:05d}" + record.leader[17:24]
    return leader.encode("latin-1") + bytes(directory) + ft + bytes(data) + bytes([RECORD_TERMINATOR])


def read_json_lines(stream: TextIO | Iterable[str]) -> Iterator[MarcRecord]:
    """Parse line-delimited JSON records: one object per line, tag -> values.

    Control fields map to a list of strings; data fields to a list of
    ``{"ind": "..", "subfields": [[code, value], ...]}`` objects.
    """
    for line in stream:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        leader = obj.get("leader", DEFAULT_LEADER)
        if len(leader) != LEADER_LEN:
            leader = (leader + DEFAULT_LEADER[len(leader) :])[:LEADER_LEN]
        fields: list[MarcField] = []
        for tag, values in obj.get("fields", {}).items():
            for value in values:
                if _is_control_tag(tag):
                    fields.append(ControlField(tag, str(value)))
                else:
                    subfields = tuple((str(c), str(v)) for c, v in value.get("subfields", []))
                    fields.append(DataField(tag, value.get("ind", "  "), subfields))
        yield MarcRecord(leader, tuple(fields))


def record_to_json_line(record: MarcRecord) -> str:
    fields: dict[str, list] = {}
    for f in record.fields:
        values = fields.setdefault(f.tag, [])
        if isinstance(f, ControlField):
            values.append(f.value)
        else:
            values.append({"ind": f.indicators, "subfields": [list(sf) for sf in f.subfields]})
    return json.dumps({"leader": record.leader, "fields": fields}, ensure_ascii=False, sort_keys=True) + "\n"


def extract_publisher_pairs(
    record: MarcRecord, record_id: str, include_264: bool = False
) -> list[RawPublisherPair]:
    """Pair each 260 $b with the nearest preceding $a in the same field.

    A $b with no preceding $a yields a pair with an empty place; records
    without 260 (or without any $b) yield the empty list.  RDA field 264 is
    consulted only when ``include_264`` is set.
    """
    tags = ("260", "264") if include_264 else ("260",)
    pairs: list[RawPublisherPair] = []
    for tag in tags:
        for f in record.data_fields(tag):
            place = ""
            for code, value in f.subfields:
                if code == "a":
                    place = value
                elif code == "b":
                    pairs.append(RawPublisherPair(place=place, name=value, record_id=record_id))
    return pairs


def record_identifier(record: MarcRecord, ordinal: int) -> str:
    """001 control field value, or a synthetic ordinal when absent."""
    value = record.control_value("001")
    if value is not None and value.strip():
        return value.strip()
    return f"rec-{ordinal}"


def extract_pairs(records: Iterable[MarcRecord], include_264: bool = False) -> Iterator[RawPublisherPair]:
    """Extract publisher pairs from a record stream, assigning record ids."""
    for ordinal, record in enumerate(records, start=1):
        rid = record_identifier(record, ordinal)
        yield from extract_publisher_pairs(record, rid, include_264=include_264)


def write_pairs_csv(pairs: Iterable[RawPublisherPair], dest: str | TextIO) -> int:
    """Write pairs as RFC 4180 CSV (record_id,place,name). Returns row count."""
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return write_pairs_csv(pairs, fh)
    writer = csv.writer(dest, lineterminator="\r\n")
    writer.writerow(PAIRS_CSV_HEADER)
    n = 0
    for pair in pairs:
        writer.writerow((pair.record_id, pair.place, pair.name))
        n += 1
    return n


def read_pairs_csv(source: str | TextIO) -> Iterator[RawPublisherPair]:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            yield from read_pairs_csv(fh)
        return
    reader = csv.reader(source)
    header = next(reader, None)
    if header is not None and tuple(header) != PAIRS_CSV_HEADER:
        raise ValueError(f"unexpected pairs CSV header: {header}")
    for row in reader:
        if not row:
            continue
        rid, place, name = row
        yield RawPublisherPair(place=place, name=name, record_id=rid)


def open_record_stream(path: str, fmt: str = "auto") -> Iterator[MarcRecord]:
    """Yield records from an ISO 2709 (.mrc) or JSON-lines (.jsonl) file."""
    if fmt == "auto":
        fmt = "jsonl" if path.endswith((".jsonl", ".json", ".ndjson")) else "iso2709"
    if fmt == "jsonl":
        with open(path, "r", encoding="utf-8") as fh:
            yield from read_json_lines(fh)
    elif fmt == "iso2709":
        with open(path, "rb") as fh:
            yield from parse_iso2709(fh)
    else:
        raise ValueError(f"unknown record format: {fmt}")


def iter_pairs_with_diagnostics(
    path: str, fmt: str = "auto", include_264: bool = False
) -> tuple[Iterator[RawPublisherPair], ParseDiagnostics]:
    """Open one input file and return (pair iterator, live diagnostics).

    The diagnostics object fills in as the iterator is consumed; JSON-lines
    inputs only use the records_read counter.
    """
    diag = ParseDiagnostics()
    if fmt == "auto":
        fmt = "jsonl" if path.endswith((".jsonl", ".json", ".ndjson")) else "iso2709"

    def _records() -> Iterator[MarcRecord]:
        if fmt == "jsonl":
            with open(path, "r", encoding="utf-8") as fh:
                for record in read_json_lines(fh):
                    diag.records_read += 1
                    yield record
        else:
            with open(path, "rb") as fh:
                yield from parse_iso2709(fh, diag)

    return extract_pairs(_records(), include_264=include_264), diag
