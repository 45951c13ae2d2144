"""Output error measures, the relative error metric and the checkpoint ratio.

``distance(cls, reference, candidate)`` always treats its first output as the
reference: relative normalizations divide by the reference's magnitude.
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .interp.inputs import ProgramOutput


class MetricError(ValueError):
    pass


class KindMismatch(MetricError):
    pass


class ShapeMismatch(MetricError):
    pass


class DegenerateReference(UserWarning):
    """Ground-truth mode with a perfect original; Direct mode was used instead."""


class ErrorClass(Enum):
    EUCLIDEAN = "EuclideanDistance"
    MANHATTAN = "ManhattanDistance"
    RMSE = "RMSE"
    WER = "WordErrorRate"
    LEVENSHTEIN = "LevenshteinDistance"
    F1 = "F1Score"
    PIXEL_ERROR_RATE = "PixelErrorRate"
    SSIM = "SSIM"

    @property
    def kind(self) -> str:
        return _KIND[self]

    @classmethod
    def parse(cls, name) -> "ErrorClass":
        if isinstance(name, cls):
            return name
        key = str(name).replace("_", "").replace("-", "").lower()
        for c in cls:
            if key in (c.value.lower(), c.name.replace("_", "").lower()):
                return c
        raise ValueError(f"unknown error class {name!r}; known: {[c.value for c in cls]}")


_KIND = {
    ErrorClass.EUCLIDEAN: "numeric", ErrorClass.MANHATTAN: "numeric", ErrorClass.RMSE: "numeric",
    ErrorClass.WER: "text", ErrorClass.LEVENSHTEIN: "text",
    ErrorClass.F1: "image", ErrorClass.PIXEL_ERROR_RATE: "image", ErrorClass.SSIM: "image",
}

DEFAULT_CLASS = {"numeric": ErrorClass.RMSE, "text": ErrorClass.WER, "image": ErrorClass.SSIM}

SSIM_WINDOW = 8
SSIM_L = 255.0
SSIM_C1 = (0.01 * SSIM_L) ** 2
SSIM_C2 = (0.03 * SSIM_L) ** 2
F1_THRESHOLD = 128


# -- primitives ------------------------------------------------------------------


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def ssim(x, y) -> float:
    """Mean SSIM over non-overlapping 8x8 windows (edge windows may be smaller)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"image shapes differ: {x.shape} vs {y.shape}")
    scores = []
    w = SSIM_WINDOW
    for r in range(0, x.shape[0], w):
        for c in range(0, x.shape[1], w):
            a = x[r:r + w, c:c + w]
            b = y[r:r + w, c:c + w]
            ma, mb = a.mean(), b.mean()
            da, db = a - ma, b - mb
            va, vb, cov = (da * da).mean(), (db * db).mean(), (da * db).mean()
            num = (2 * ma * mb + SSIM_C1) * (2 * cov + SSIM_C2)
            den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2)
            scores.append(num / den)
    return float(np.mean(scores))


def f1_score(reference, candidate) -> float:
    ref = np.asarray(reference) >= F1_THRESHOLD
    pred = np.asarray(candidate) >= F1_THRESHOLD
    if ref.shape != pred.shape:
        raise ShapeMismatch(f"image shapes differ: {ref.shape} vs {pred.shape}")
    tp = int(np.sum(ref & pred))
    fp = int(np.sum(~ref & pred))
    fn = int(np.sum(ref & ~pred))
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


# -- distances -------------------------------------------------------------------


def _check(cls: ErrorClass, reference: ProgramOutput, candidate: ProgramOutput):
    if reference.kind != cls.kind or candidate.kind != cls.kind:
        raise KindMismatch(f"{cls.value} needs {cls.kind} outputs, got {reference.kind}/{candidate.kind}")
    if cls.kind != "text" and reference.shape != candidate.shape:
        raise ShapeMismatch(f"output shapes differ: {reference.shape} vs {candidate.shape}")


def _relative(raw: float, scale: float) -> float:
    if scale == 0:
        return 0.0 if raw == 0 else 1.0
    return min(1.0, raw / scale)


def raw_distance(cls, reference: ProgramOutput, candidate: ProgramOutput) -> float:
    """Unnormalized value: a norm, an edit count, a pixel count or a score."""
    cls = ErrorClass.parse(cls)
    _check(cls, reference, candidate)
    if cls.kind == "numeric":
        diff = np.subtract(candidate.value, reference.value, dtype=np.float64)
        if cls is ErrorClass.EUCLIDEAN:
            return math.sqrt(math.fsum(d * d for d in diff))
        if cls is ErrorClass.MANHATTAN:
            return math.fsum(abs(d) for d in diff)
        return math.sqrt(math.fsum(d * d for d in diff) / len(diff)) if len(diff) else 0.0
    if cls is ErrorClass.LEVENSHTEIN:
        return float(edit_distance(reference.value, candidate.value))
    if cls is ErrorClass.WER:
        return float(edit_distance(reference.value.split(), candidate.value.split()))
    if cls is ErrorClass.PIXEL_ERROR_RATE:
        return float(np.sum(np.asarray(reference.value) != np.asarray(candidate.value)))
    if cls is ErrorClass.SSIM:
        return ssim(reference.value, candidate.value)
    return f1_score(reference.value, candidate.value)


def distance(cls, reference: ProgramOutput, candidate: ProgramOutput) -> float:
    """Normalized distance in [0, 1]; 0 for identical outputs."""
    cls = ErrorClass.parse(cls)
    raw = raw_distance(cls, reference, candidate)
    if cls.kind == "numeric":
        ref = np.asarray(reference.value, dtype=np.float64)
        if cls is ErrorClass.MANHATTAN:
            return _relative(raw, math.fsum(abs(v) for v in ref))
        scale = math.sqrt(math.fsum(v * v for v in ref))
        if cls is ErrorClass.RMSE:
            scale = scale / math.sqrt(len(ref)) if len(ref) else 0.0
        return _relative(raw, scale)
    if cls is ErrorClass.LEVENSHTEIN:
        longest = max(len(reference.value), len(candidate.value))
        return raw / longest if longest else 0.0
    if cls is ErrorClass.WER:
        return _relative(raw, len(reference.value.split()))
    if cls is ErrorClass.PIXEL_ERROR_RATE:
        r, c = reference.shape
        return raw / (r * c) if r * c else 0.0
    if reference.value == candidate.value:
        return 0.0
    return min(1.0, max(0.0, 1.0 - raw))


def case_distance(cls, reference: Optional[ProgramOutput], candidate: Optional[ProgramOutput]) -> float:
    """distance() that scores a missing or reshaped candidate as maximal error."""
    if reference is None or candidate is None:
        return 1.0
    try:
        return distance(cls, reference, candidate)
    except ShapeMismatch:
        return 1.0


# -- aggregate metric ----------------------------------------------------------------

GROUND_TRUTH = "GroundTruth"
DIRECT = "Direct"


@dataclass(frozen=True)
class ErrorReport:
    e_o: Optional[float]
    e_a: float
    e_m: float
    mode: str
    degenerate: bool = False
    c: Optional[float] = None

    def to_dict(self) -> dict:
        return {"e_o": self.e_o, "e_a": self.e_a, "e_m": self.e_m, "mode": self.mode,
                "degenerate": self.degenerate, "c": self.c}


def error_metric(outputs_o: Sequence, outputs_a: Sequence, cls,
                 ground_truth: Optional[Sequence] = None) -> ErrorReport:
    """Relative error of an approximated program against its original.

    With a ground truth for every case: e_o and e_a are mean distances to the
    truth and e_m = |e_o - e_a| / e_o. Otherwise e_m is the mean distance of
    approximated outputs from original outputs.
    """
    cls = ErrorClass.parse(cls)
    if len(outputs_o) != len(outputs_a):
        raise ValueError("original and approximated output sequences differ in length")
    if not outputs_o:
        raise ValueError("no outputs to compare")
    degenerate = False
    if ground_truth is not None and len(ground_truth) == len(outputs_o) and all(g is not None for g in ground_truth):
        e_o = float(np.mean([case_distance(cls, g, o) for g, o in zip(ground_truth, outputs_o)]))
        e_a = float(np.mean([case_distance(cls, g, a) for g, a in zip(ground_truth, outputs_a)]))
        if e_o > 0:
            return ErrorReport(e_o, e_a, abs(e_o - e_a) / e_o, GROUND_TRUTH)
        warnings.warn("original program matches the ground truth exactly; using Direct mode",
                      DegenerateReference, stacklevel=2)
        degenerate = True
    e_m = float(np.mean([case_distance(cls, o, a) for o, a in zip(outputs_o, outputs_a)]))
    return ErrorReport(None, e_m, e_m, DIRECT, degenerate)


def checkpoint_ratio(c_o: float, c_a: float) -> float:
    if c_o < 0 or c_a < 0:
        raise ValueError("checkpoint counts must be >= 0")
    if c_o == 0:
        return 1.0 if c_a == 0 else math.inf
    return c_a / c_o
