"""
I/O Adapter - Plain-text input
One observation per line, '#' starts a comment, blank lines are skipped.
Matrices are one row per line with whitespace or comma separated entries.
Errors name the offending line.
"""
import sys
from pathlib import Path
from typing import Iterator, List, Optional, TextIO, Tuple

import numpy as np

from rdgof.domain.distributions import EmpiricalSample, SampleKind
from rdgof.domain.errors import InputError

STDIN = "-"


def _lines(stream: TextIO) -> Iterator[Tuple[int, str]]:
    """(line_number, content) of every non-empty line, comments removed"""
    for number, raw in enumerate(stream, start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            yield number, content


def _open(path: str):
    if path == STDIN:
        return sys.stdin
    file = Path(path)
    if not file.is_file():
        raise InputError(f"Input file not found: {path}")
    return file.open("r", encoding="utf-8")


def parse_observations(stream: TextIO, kind: SampleKind, l: Optional[int] = None,
                       degrees: bool = False) -> EmpiricalSample:
    """
    Parse observations from an open text stream

    Args:
        stream: Text stream
        kind: Categorical labels, reals or angles
        l: Alphabet size; categorical labels must be below it
        degrees: Angles are given in degrees

    Returns:
        EmpiricalSample

    Raises:
        InputError: On the first unparseable or out-of-range line
    """
    values: List[float] = []
    for number, content in _lines(stream):
        if kind is SampleKind.CATEGORICAL:
            try:
                label = int(content)
            except ValueError:
                raise InputError(f"expected an integer label, got '{content}'", number)
            if label < 0 or (l is not None and label >= l):
                raise InputError(f"label {label} outside [0, {l})", number)
            values.append(label)
        else:
            try:
                value = float(content)
            except ValueError:
                raise InputError(f"expected a number, got '{content}'", number)
            if not np.isfinite(value):
                raise InputError(f"observation must be finite, got '{content}'", number)
            values.append(value)

    if not values:
        raise InputError("No observations in input")
    if kind is SampleKind.CIRCULAR and degrees:
        return EmpiricalSample.from_degrees(values)
    return EmpiricalSample(kind, np.asarray(values, dtype=float))


def read_observations(path: str, kind: SampleKind, l: Optional[int] = None,
                      degrees: bool = False) -> EmpiricalSample:
    """Read observations from a file, or stdin when path is '-'"""
    stream = _open(path)
    try:
        return parse_observations(stream, kind, l, degrees)
    finally:
        if stream is not sys.stdin:
            stream.close()


def parse_matrix(stream: TextIO) -> np.ndarray:
    """
    Parse a nonnegative rectangular matrix

    Raises:
        InputError: On a malformed row, a ragged row or a negative entry
    """
    rows: List[List[float]] = []
    for number, content in _lines(stream):
        try:
            row = [float(entry) for entry in content.replace(",", " ").split()]
        except ValueError:
            raise InputError(f"malformed matrix row '{content}'", number)
        if rows and len(row) != len(rows[0]):
            raise InputError(f"row has {len(row)} entries, expected {len(rows[0])}", number)
        if any(not np.isfinite(x) or x < 0 for x in row):
            raise InputError("matrix entries must be finite and nonnegative", number)
        rows.append(row)
    if not rows:
        raise InputError("No matrix rows in input")
    return np.array(rows, dtype=float)


def read_matrix(path: str) -> np.ndarray:
    """Read a matrix file, or stdin when path is '-'"""
    stream = _open(path)
    try:
        return parse_matrix(stream)
    finally:
        if stream is not sys.stdin:
            stream.close()
