"""Readers and writers for the plain-text input formats: ASCII PGM images,
numeric CSV files, UTF-8 text and JSON input manifests."""

import csv
import json
import os
from typing import List, Optional, Sequence

from ..interp.inputs import InputCase, ProgramOutput


class InputFormatError(ValueError):
    pass


def read_pgm(path) -> List[List[int]]:
    """Read an ASCII (P2) grayscale image; values are rescaled to 0..255."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise InputFormatError(f"{path}: not an ASCII PGM (P2) file")
    try:
        cols, rows, maxval = (int(t) for t in tokens[1:4])
        pixels = [int(t) for t in tokens[4:]]
    except ValueError:
        raise InputFormatError(f"{path}: non-integer token in PGM data") from None
    if cols <= 0 or rows <= 0 or not 0 < maxval < 65536:
        raise InputFormatError(f"{path}: bad PGM header {cols}x{rows} max {maxval}")
    if len(pixels) != rows * cols:
        raise InputFormatError(f"{path}: expected {rows * cols} pixels, found {len(pixels)}")
    if any(not 0 <= p <= maxval for p in pixels):
        raise InputFormatError(f"{path}: pixel outside 0..{maxval}")
    if maxval != 255:
        pixels = [round(p * 255 / maxval) for p in pixels]
    return [pixels[r * cols:(r + 1) * cols] for r in range(rows)]


def format_pgm(image: Sequence[Sequence[int]]) -> str:
    rows, cols = len(image), len(image[0])
    lines = ["P2", f"{cols} {rows}", "255"]
    lines += [" ".join(str(int(v)) for v in row) for row in image]
    return "\n".join(lines) + "\n"


def write_pgm(image, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_pgm(image))


def read_numbers(path) -> List[float]:
    """Every numeric cell of a CSV file in row-major order.

    A first row that is not entirely numeric is treated as a header.
    """
    out: List[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row if c.strip()]
            if not cells:
                continue
            try:
                out.extend(float(c) for c in cells)
            except ValueError:
                if lineno == 1:
                    continue
                raise InputFormatError(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
    return out


def read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def read_output(path, kind: str) -> ProgramOutput:
    """Load a ground-truth output file of the given output kind."""
    if kind == "image":
        return ProgramOutput("image", tuple(tuple(r) for r in read_pgm(path)))
    if kind == "numeric":
        return ProgramOutput("numeric", tuple(read_numbers(path)))
    return ProgramOutput("text", " ".join(read_text(path).split()))


def load_manifest(path, output_kind: Optional[str] = None) -> List[InputCase]:
    """Build input cases from a JSON manifest.

    Each case may name an ``image`` (PGM), ``numbers`` (CSV) and ``text``
    (UTF-8) file, plus a ``ground_truth`` file in the program's output
    format. Paths are relative to the manifest.
    """
    base = os.path.dirname(os.path.abspath(path))
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON: {exc}") from None
    entries = doc.get("cases") if isinstance(doc, dict) else None
    if not isinstance(entries, list) or not entries:
        raise InputFormatError(f"{path}: manifest needs a non-empty 'cases' list")
    cases = []
    seen = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise InputFormatError(f"{path}: case {i} is not an object")
        unknown = set(entry) - {"id", "image", "numbers", "text", "ground_truth"}
        if unknown:
            raise InputFormatError(f"{path}: case {i} has unknown keys {sorted(unknown)}")
        cid = str(entry.get("id", f"case{i}"))
        if cid in seen:
            raise InputFormatError(f"{path}: duplicate case id {cid!r}")
        seen.add(cid)

        def resolve(key):
            return os.path.join(base, entry[key]) if key in entry else None

        truth = None
        if "ground_truth" in entry:
            if output_kind is None:
                raise InputFormatError(f"{path}: ground truth needs the program's output kind")
            truth = read_output(resolve("ground_truth"), output_kind)
        try:
            cases.append(InputCase(
                id=cid,
                numbers=read_numbers(resolve("numbers")) if "numbers" in entry else (),
                image=read_pgm(resolve("image")) if "image" in entry else None,
                text=read_text(resolve("text")) if "text" in entry else None,
                ground_truth=truth,
            ))
        except OSError as exc:
            raise InputFormatError(f"{path}: case {cid!r}: {exc}") from None
    return cases
