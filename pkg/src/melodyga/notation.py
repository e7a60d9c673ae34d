"""ABC notation reader and writer for the melody chromosome encoding.

Only the subset that maps onto a chromosome is accepted: plain notes with an
optional accidental, octave marks and a duration multiplier, rests and bar
lines. Pitches are read literally (no key-signature or in-measure accidental
carry-over). Constructs outside the encoding (chords, ties, slurs, repeats,
grace notes, tuplets, broken rhythm) raise :class:`AbcSyntaxError` naming the
construct.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .chromosome import Chromosome, Note, REST_ACCIDENTAL, REST_OCTAVE, REST_STEP

__all__ = [
    "AbcSyntaxError",
    "UnknownHeaderWarning",
    "TuneHeader",
    "Token",
    "tokenize_body",
    "parse_corpus",
    "parse_tune",
    "parse_body",
    "serialize_tune",
    "serialize_corpus",
    "format_duration",
    "parse_fraction",
    "parse_meter",
]

STEP_OF_LETTER = {"c": 1, "d": 2, "e": 3, "f": 4, "g": 5, "a": 6, "b": 7}
LETTER_OF_STEP = {v: k for k, v in STEP_OF_LETTER.items()}
ACCIDENTAL_OF_MARK = {"_": -1, "^": 1, "=": 0}

DEFAULT_METER_TEXT = "4/4"
DEFAULT_UNIT_LENGTH = Fraction(1, 4)


class AbcSyntaxError(ValueError):
    """Malformed or unsupported ABC input, with its source location."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class UnknownHeaderWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TuneHeader:
    index: int = 0
    title: str = ""
    meter: Fraction = Fraction(1)
    unit_length: Fraction = DEFAULT_UNIT_LENGTH
    key: str = "C"
    # Original M: text (e.g. "4/4" vs "2/2"); not part of equality.
    meter_text: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("tune index must be non-negative")
        object.__setattr__(self, "meter", Fraction(self.meter))
        object.__setattr__(self, "unit_length", Fraction(self.unit_length))
        if self.meter <= 0 or self.unit_length <= 0:
            raise ValueError("meter and unit length must be positive")

    @property
    def measure_units(self) -> Fraction:
        """Measure length in multiples of the unit length."""
        return self.meter / self.unit_length

    def meter_label(self) -> str:
        if self.meter_text is not None and parse_meter(self.meter_text) == self.meter:
            return self.meter_text
        if self.meter.denominator == 1:
            return f"{4 * self.meter.numerator}/4"
        return f"{self.meter.numerator}/{self.meter.denominator}"


@dataclass(frozen=True)
class Token:
    kind: str  # note | rest | bar | header_line | whitespace
    text: str
    column: int
    accidental: str = ""
    letter: str = ""
    octave_marks: str = ""
    duration_text: str = ""


# ---------------------------------------------------------------------------
# fractions and durations

_FRACTION_RE = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")


def parse_fraction(text: str) -> Fraction:
    m = _FRACTION_RE.match(text)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
    elif text.strip().isdigit():
        num, den = int(text), 1
    else:
        raise ValueError(f"not a fraction: {text!r}")
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    value = Fraction(num, den)
    if value <= 0:
        raise ValueError(f"not a positive fraction: {text!r}")
    return value


def parse_meter(text: str) -> Fraction:
    t = text.strip()
    if t == "C":
        return Fraction(1)
    if t == "C|":
        return Fraction(1)
    m = _FRACTION_RE.match(t)
    if not m:
        raise ValueError(f"unsupported meter {text!r}")
    num, den = int(m.group(1)), int(m.group(2))
    if num == 0 or den == 0:
        raise ValueError(f"meter must be positive: {text!r}")
    return Fraction(num, den)


def _duration_value(text: str) -> Fraction:
    """Duration multiplier of a note suffix such as ``""``, ``"3"``, ``"/"``, ``"3/2"``."""
    if text == "":
        return Fraction(1)
    m = re.fullmatch(r"(\d*)(/*)(\d*)", text)
    if not m:
        raise ValueError(f"bad duration {text!r}")
    num_s, slashes, den_s = m.groups()
    num = int(num_s) if num_s else 1
    if not slashes:
        if den_s:
            raise ValueError(f"bad duration {text!r}")
        den = 1
    elif den_s:
        if len(slashes) != 1:
            raise ValueError(f"bad duration {text!r}")
        den = int(den_s)
    else:
        den = 2 ** len(slashes)
    if num == 0 or den == 0:
        raise ValueError(f"duration {text!r} is not a positive rational")
    return Fraction(num, den)


def format_duration(d: Fraction) -> str:
    d = Fraction(d)
    if d == 1:
        return ""
    if d == Fraction(1, 2):
        return "/"
    if d == Fraction(1, 4):
        return "//"
    if d.denominator == 1:
        return str(d.numerator)
    return f"{d.numerator}/{d.denominator}"


# ---------------------------------------------------------------------------
# tokenizer

_NOTE_RE = re.compile(r"([_^=]*)([A-Ga-gzZ])([,']*)([0-9/]*)")

_UNSUPPORTED = {
    "[": "chord",
    "]": "chord",
    "-": "tie",
    "(": "slur or tuplet",
    ")": "slur",
    "{": "grace notes",
    "}": "grace notes",
    ":": "repeat",
    '"': "chord symbol or annotation",
    ">": "broken rhythm",
    "<": "broken rhythm",
    "!": "decoration",
    "+": "decoration",
}


def tokenize_body(line: str, line_no: int | None = None) -> Iterator[Token]:
    """Split one body line into note, rest, bar and whitespace tokens."""
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch in " \t\r\n":
            j = i
            while j < n and line[j] in " \t\r\n":
                j += 1
            yield Token("whitespace", line[i:j], i + 1)
            i = j
            continue
        if ch == "|":
            j = i
            while j < n and line[j] == "|":
                j += 1
            if j < n and line[j] == "]":
                j += 1
            if j < n and (line[j] == ":" or line[j].isdigit()):
                raise AbcSyntaxError("repeats and endings are not supported", line_no, j + 1)
            yield Token("bar", line[i:j], i + 1)
            i = j
            continue
        if ch == "[" and i + 1 < n and line[i + 1] == "|":
            yield Token("bar", "[|", i + 1)
            i += 2
            continue
        if ch == "\\" and line[i + 1 :].strip() == "":
            break
        m = _NOTE_RE.match(line, i)
        if m:
            acc, letter, marks, dur = m.groups()
            if len(acc) > 1:
                raise AbcSyntaxError(
                    f"only one accidental mark per note is supported, got {acc!r}", line_no, i + 1
                )
            if "," in marks and "'" in marks:
                raise AbcSyntaxError("octave marks mix ',' and \"'\"", line_no, i + 1)
            kind = "rest" if letter in "zZ" else "note"
            if kind == "rest" and (acc or marks):
                raise AbcSyntaxError("rests take no accidental or octave marks", line_no, i + 1)
            yield Token(kind, m.group(0), i + 1, acc, letter, marks, dur)
            i = m.end()
            continue
        if ch in _UNSUPPORTED:
            raise AbcSyntaxError(
                f"unsupported construct ({_UNSUPPORTED[ch]}) at {ch!r}", line_no, i + 1
            )
        raise AbcSyntaxError(f"unrecognized character {ch!r}", line_no, i + 1)


def _note_from_token(tok: Token, line_no) -> Note:
    try:
        duration = _duration_value(tok.duration_text)
    except ValueError as exc:
        raise AbcSyntaxError(str(exc), line_no, tok.column) from None
    if tok.kind == "rest":
        return Note(REST_ACCIDENTAL, REST_STEP, REST_OCTAVE, duration)
    accidental = ACCIDENTAL_OF_MARK[tok.accidental] if tok.accidental else 0
    letter = tok.letter
    base = 4 if letter.isupper() else 5
    octave = base - tok.octave_marks.count(",") + tok.octave_marks.count("'")
    if not 1 <= octave <= 7:
        raise AbcSyntaxError(f"octave of {tok.text!r} is outside the range 1..7", line_no, tok.column)
    return Note(accidental, STEP_OF_LETTER[letter.lower()], octave, duration)


# ---------------------------------------------------------------------------
# parser

_HEADER_RE = re.compile(r"^([A-Za-z]):(.*)$")
_KNOWN_LABELS = set("XTMLK")


def _parse_block(lines: list[tuple[int, str]]) -> tuple[TuneHeader, Chromosome]:
    first_no, first = lines[0]
    try:
        index = int(first[2:].strip())
    except ValueError:
        raise AbcSyntaxError(f"malformed X: header {first!r}", first_no) from None
    if index < 0:
        raise AbcSyntaxError("tune index must be non-negative", first_no)
    title = None
    meter = meter_text = None
    unit = None
    key = None
    notes: list[Note] = []
    in_body = False
    for line_no, raw in lines[1:]:
        line = raw.split("%", 1)[0].rstrip()
        if not line.strip():
            continue
        hm = _HEADER_RE.match(line)
        if hm:
            label, value = hm.group(1), hm.group(2).strip()
            if label not in _KNOWN_LABELS:
                warnings.warn(
                    f"line {line_no}: skipping unsupported header field {label}:",
                    UnknownHeaderWarning,
                    stacklevel=3,
                )
                continue
            if in_body:
                raise AbcSyntaxError(f"header field {label}: inside the tune body", line_no)
            if label == "X":
                raise AbcSyntaxError("duplicate X: header", line_no)
            if label == "T":
                if title is None:
                    title = value
            elif label == "M":
                try:
                    meter = parse_meter(value)
                except ValueError as exc:
                    raise AbcSyntaxError(f"malformed M: header ({exc})", line_no) from None
                meter_text = value if value not in ("C", "C|") else ("4/4" if value == "C" else "2/2")
            elif label == "L":
                try:
                    unit = parse_fraction(value)
                except ValueError as exc:
                    raise AbcSyntaxError(f"malformed L: header ({exc})", line_no) from None
            elif label == "K":
                key = value
                in_body = True
            continue
        if not in_body:
            raise AbcSyntaxError("malformed header line (tune body must follow K:)", line_no)
        for tok in tokenize_body(line, line_no):
            if tok.kind in ("note", "rest"):
                notes.append(_note_from_token(tok, line_no))
    if key is None:
        raise AbcSyntaxError(f"tune X:{index} has no K: header", first_no)
    if not notes:
        raise AbcSyntaxError(f"tune X:{index} has no notes", first_no)
    header = TuneHeader(
        index=index,
        title=title or "",
        meter=meter if meter is not None else parse_meter(DEFAULT_METER_TEXT),
        unit_length=unit if unit is not None else DEFAULT_UNIT_LENGTH,
        key=key,
        meter_text=meter_text if meter is not None else DEFAULT_METER_TEXT,
    )
    return header, Chromosome.from_notes(notes)


def _split_blocks(text: str) -> list[list[tuple[int, str]]]:
    blocks: list[list[tuple[int, str]]] = []
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("X:"):
            current = [(line_no, stripped)]
            blocks.append(current)
            continue
        if current is None:
            if stripped and not stripped.startswith("%"):
                raise AbcSyntaxError("content before the first X: header", line_no)
            continue
        current.append((line_no, raw))
    return blocks


def parse_corpus(text: str, *, continue_on_error: bool = False, errors: list | None = None):
    """Parse every tune block of an ABC file.

    With ``continue_on_error`` a failing tune is skipped and its exception
    appended to ``errors`` (when given) instead of being raised.
    """
    tunes = []
    for block in _split_blocks(text):
        try:
            tunes.append(_parse_block(block))
        except AbcSyntaxError as exc:
            if not continue_on_error:
                raise
            if errors is not None:
                errors.append(exc)
    return tunes


def parse_tune(text: str) -> tuple[TuneHeader, Chromosome]:
    tunes = parse_corpus(text)
    if len(tunes) != 1:
        raise AbcSyntaxError(f"expected exactly one tune, found {len(tunes)}")
    return tunes[0]


def parse_body(body: str, unit_length: Fraction = DEFAULT_UNIT_LENGTH) -> Chromosome:
    """Parse a bare note body (no headers)."""
    notes = []
    for line_no, line in enumerate(body.splitlines(), start=1):
        line = line.split("%", 1)[0]
        for tok in tokenize_body(line, line_no):
            if tok.kind in ("note", "rest"):
                notes.append(_note_from_token(tok, line_no))
    if not notes:
        raise AbcSyntaxError("body has no notes")
    return Chromosome.from_notes(notes)


# ---------------------------------------------------------------------------
# serializer


def format_note(note: Note) -> str:
    dur = format_duration(note.duration)
    if note.step == REST_STEP:
        return "z" + dur
    acc = {-1: "_", 0: "", 1: "^"}[note.accidental]
    letter = LETTER_OF_STEP[note.step]
    if note.octave <= 4:
        pitch = letter.upper() + "," * (4 - note.octave)
    else:
        pitch = letter + "'" * (note.octave - 5)
    return acc + pitch + dur


def serialize_body(chromosome: Chromosome, measure_units: Fraction, bars_per_line: int = 4) -> str:
    parts: list[str] = []
    lines: list[str] = []
    elapsed = Fraction(0)
    bars = 0
    for note in chromosome.notes:
        parts.append(format_note(note))
        elapsed += note.duration
        if elapsed % measure_units == 0:
            parts.append(" | ")
            bars += 1
            if bars % bars_per_line == 0:
                lines.append("".join(parts).rstrip())
                parts = []
    if parts:
        lines.append("".join(parts).rstrip())
    return "\n".join(lines)


def serialize_tune(header: TuneHeader, chromosome: Chromosome) -> str:
    head = [
        f"X:{header.index}",
        f"T:{header.title}",
        f"M:{header.meter_label()}",
        f"L:{header.unit_length.numerator}/{header.unit_length.denominator}",
        f"K:{header.key}",
    ]
    return "\n".join(head) + "\n" + serialize_body(chromosome, header.measure_units) + "\n"


def serialize_corpus(tunes) -> str:
    return "\n".join(serialize_tune(h, c) for h, c in tunes)
