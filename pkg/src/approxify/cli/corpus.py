"""The benchmark corpus: three ApproxC programs, their inputs, synthetic
energy traces and run configurations.

Program sources are authored by hand; all data files are produced by
:func:`generate` from fixed seeds, so ``python -m approxify.cli.corpus DIR``
rebuilds them byte for byte.
"""

import argparse
import json
import os
import random
from dataclasses import dataclass
from typing import Dict, List

from ..interp.inputs import InputCase
from ..lang import Program, load_source
from .files import format_pgm, load_manifest

CORPUS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "corpus")

IMAGE_SIZE = 16
LQI_RECORDS = 1060
TRACE_MS = 60_000
TRACE_STEP_MS = 10
TRACE_NAMES = ("constant", "square", "noisy", "sawtooth", "bursty")


@dataclass(frozen=True)
class Benchmark:
    name: str
    source: str
    manifest: str
    config: str
    output_kind: str

    def program(self) -> Program:
        return load_source(self.source)

    def cases(self) -> List[InputCase]:
        return load_manifest(self.manifest, self.output_kind)


def trace_paths(root: str = CORPUS_DIR) -> Dict[str, str]:
    return {name: os.path.join(root, "traces", f"{name}.csv") for name in TRACE_NAMES}


def corpus(root: str = CORPUS_DIR) -> Dict[str, Benchmark]:
    kinds = {"susan": "image", "lqi": "numeric", "strsearch": "numeric"}
    return {
        name: Benchmark(name, os.path.join(root, f"{name}.axc"),
                        os.path.join(root, name, "manifest.json"),
                        os.path.join(root, "configs", f"{name}.json"), kind)
        for name, kind in kinds.items()
    }


# -- data generation ----------------------------------------------------------------


def _fill(img, r0, r1, c0, c1, value):
    for r in range(r0, r1):
        for c in range(c0, c1):
            img[r][c] = value


def susan_images() -> Dict[str, List[List[int]]]:
    """Blocky test scenes; edges sit mostly away from the last rows and
    columns so early loop truncation loses little structure."""
    n = IMAGE_SIZE
    squares = [[60] * n for _ in range(n)]
    _fill(squares, 2, 10, 2, 11, 200)
    _fill(squares, 4, 7, 5, 8, 120)
    disk = [[220 if (r - 5.5) ** 2 + (c - 5.5) ** 2 < 20 else 40 for c in range(n)] for r in range(n)]
    _fill(disk, 11, 13, 2, 6, 150)
    blocks = [[180] * n for _ in range(n)]
    _fill(blocks, 1, 6, 1, 6, 30)
    _fill(blocks, 7, 11, 6, 11, 90)
    _fill(blocks, 2, 4, 9, 12, 250)
    return {"squares": squares, "disk": disk, "blocks": blocks}


def lqi_log(seed: int, records: int = LQI_RECORDS, start: float = 0.98, end: float = 0.45) -> List[tuple]:
    """(timestamp_ms, delivered) rows for a link whose delivery probability
    degrades linearly from ``start`` to ``end``."""
    rng = random.Random(seed)
    rows = []
    t = 0
    for i in range(records):
        t += rng.randint(80, 120)
        p = start + (end - start) * i / (records - 1)
        rows.append((t, 1 if rng.random() < p else 0))
    return rows


WORDS = ("the", "quick", "brown", "fox", "jumps", "over", "lazy", "dog", "and",
         "barks", "at", "a", "cat", "sat", "on", "mat", "abab", "aba")


def search_text(seed: int, words: int) -> str:
    rng = random.Random(seed)
    return " ".join(rng.choice(WORDS) for _ in range(words)) + "\n"


SEARCH_CASES = (
    ("fox", 11, 60, ("the", "fox", "dog", "o")),
    ("aba", 12, 60, ("aba", "ab", "cat", "a")),
)


def trace_samples(name: str, seed: int = 2024) -> List[tuple]:
    rng = random.Random(seed)
    steps = TRACE_MS // TRACE_STEP_MS + 1
    out = []
    burst_left = 0
    gap_left = rng.randint(10, 60)
    for k in range(steps):
        t = k * TRACE_STEP_MS
        if name == "constant":
            v = 5.0
        elif name == "square":
            v = 5.0 if t % 500 < 300 else 0.0
        elif name == "noisy":
            v = max(0.0, 4.5 + rng.gauss(0.0, 0.6))
        elif name == "sawtooth":
            v = 6.0 * (t % 1000) / 1000
        elif name == "bursty":
            if burst_left > 0:
                burst_left -= 1
                v = 5.5
            else:
                gap_left -= 1
                v = 1.0
                if gap_left <= 0:
                    burst_left = rng.randint(5, 30)
                    gap_left = rng.randint(10, 60)
        else:
            raise ValueError(f"unknown trace {name!r}")
        out.append((t, v))
    return out


def _config(source, manifest, error_class, e_b, caps, traces) -> dict:
    return {
        "source": source,
        "inputs": manifest,
        "error_class": error_class,
        "error_bound": e_b,
        "platform": "cortex-m",
        "capacitors_uf": caps,
        "traces": traces,
        "seed": 0,
        "sweep": {},
    }


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def generate(root: str) -> List[str]:
    """Write every corpus data file under ``root``; returns relative paths."""
    written = []

    def put(rel, text):
        _write(os.path.join(root, rel), text)
        written.append(rel)

    cases = []
    for name, img in susan_images().items():
        put(f"susan/{name}.pgm", format_pgm(img))
        cases.append({"id": name, "image": f"{name}.pgm"})
    put("susan/manifest.json", _json({"cases": cases}))

    cases = []
    for seed in (1, 2):
        rows = lqi_log(seed)
        put(f"lqi/log{seed}.csv", "timestamp_ms,delivered\n" + "".join(f"{t},{d}\n" for t, d in rows))
        cases.append({"id": f"log{seed}", "numbers": f"log{seed}.csv"})
    put("lqi/manifest.json", _json({"cases": cases}))

    cases = []
    for name, seed, words, patterns in SEARCH_CASES:
        put(f"strsearch/{name}.txt", search_text(seed, words))
        rows = [",".join(str(ord(ch)) for ch in pat) + ",0" for pat in patterns]
        put(f"strsearch/{name}_patterns.csv", "\n".join(rows) + "\n")
        cases.append({"id": name, "text": f"{name}.txt", "numbers": f"{name}_patterns.csv"})
    put("strsearch/manifest.json", _json({"cases": cases}))

    for name in TRACE_NAMES:
        samples = trace_samples(name)
        put(f"traces/{name}.csv", "time_ms,volts\n" + "".join(f"{t},{v:.6f}\n" for t, v in samples))

    put("configs/susan.json", _json(_config("../susan.axc", "../susan/manifest.json", "SSIM", 0.35,
                                            [220, 330, 470, 680], ["../traces/constant.csv"])))
    put("configs/lqi.json", _json(_config("../lqi.axc", "../lqi/manifest.json", "RMSE", 0.30,
                                          [220], ["../traces/constant.csv"])))
    put("configs/strsearch.json", _json(_config("../strsearch.axc", "../strsearch/manifest.json", "RMSE", 0.30,
                                                [220, 470], ["../traces/constant.csv"])))
    return written


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="approxify-corpus", description="Regenerate corpus data files.")
    ap.add_argument("root", nargs="?", default=CORPUS_DIR)
    args = ap.parse_args(argv)
    for rel in generate(args.root):
        print(rel)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
