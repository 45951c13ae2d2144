"""Write sweep tables, the selection summary, a markdown report and event logs.

Files are fully rendered in memory first and written at the end, so a rerun
with the same inputs reproduces them byte for byte.
"""

import json
import math
import os
from typing import Dict, List

from ..energy import format_event_log
from ..search import reference_curves
from .pipeline import STATUS_OK, CapacitorRun, Report, source_name

SWEEP_COLUMNS = ("cap_uf", "l", "m", "l_p", "f_p", "e_m", "c", "objective", "status")


def _num(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(float(x)) if isinstance(x, float) else str(x)


def _cap(cap_uf: float) -> str:
    return f"{cap_uf:g}"


def reduction_pct(c: float) -> float:
    return round((1.0 - c) * 100.0, 4)


def render_sweep(report: Report) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for run in report.runs:
        for r in run.records:
            lines.append(",".join([_cap(run.cap_uf), r.l, r.m, _num(r.l_p), _num(r.f_p), _num(r.e_t),
                                   _num(r.c), _num(r.objective), r.status]))
    return "\n".join(lines) + "\n"


def _selection_doc(run: CapacitorRun) -> dict:
    doc = {
        "cap_uf": run.cap_uf,
        "status": run.status,
        "baseline_checkpoints": run.baseline_checkpoints,
        "baseline_cycles": run.baseline_cycles,
        "safe_blocks": [b.id for b in run.safe],
    }
    if run.message:
        doc["message"] = run.message
    sel = run.selection
    if sel is not None:
        doc["selected"] = {
            **sel.config.to_dict(),
            "e_m": sel.e_m,
            "error_mode": run.error_mode,
            "c": sel.c,
            "objective": sel.objective,
            "checkpoints": run.checkpoints_a,
            "reduction_pct": reduction_pct(sel.c),
        }
    return doc


def render_selection(report: Report) -> str:
    cfg = report.config
    doc = {
        "source": source_name(cfg),
        "error_class": report.error_class.value,
        "error_bound": cfg.error_bound,
        "platform": cfg.platform.name,
        "seed": cfg.seed,
        "cases": report.cases,
        "traces": [os.path.basename(t) for t in cfg.traces],
        "capacitors": [_selection_doc(r) for r in report.runs],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _md_run(run: CapacitorRun, report: Report) -> List[str]:
    out = [f"## Capacitor {_cap(run.cap_uf)} uF", ""]
    if run.status != STATUS_OK and not run.baseline_checkpoints and run.message:
        out += [f"Baseline failed: {run.message}", ""]
        return out
    runs = report.cases * len(report.config.traces)
    out += ["### Baseline", "",
            f"- checkpoints c_o: {run.baseline_checkpoints} (summed over {runs} case/trace runs)",
            f"- program cycles: {run.baseline_cycles} (summed)", ""]
    if run.selection is None:
        out += [f"No configuration selected: {run.message}", ""]
        return out
    out += ["### Safety probes", "", "| block | technique | status | e_m | c | verdict |",
            "|---|---|---|---|---|---|"]
    for p in run.probes:
        tech = f"{p.technique.name} {p.technique.intensity:g}" if p.technique else "-"
        verdict = "safe" if p.safe else f"excluded ({p.reason})"
        out.append(f"| {p.block.id} | {tech} | {p.status} | {p.e_m:.4f} | {p.c:.4f} | {verdict} |")
    sel = run.selection
    rec = sel.record
    out += ["", "### Selection", "",
            f"- loop technique: {rec.l} at {rec.l_p:g}",
            f"- memo technique: {rec.m} at tolerance {rec.f_p:g}" if any(not b.is_loop for b in run.safe)
            else "- memo technique: none (no safe function)",
            f"- e_m: {sel.e_m:.4f} ({run.error_mode} mode)",
            f"- c: {sel.c:.4f} ({run.checkpoints_a} of {run.baseline_checkpoints} checkpoints)",
            f"- checkpoint reduction: {reduction_pct(sel.c):.4f}%"]
    if rec.l != "sampling":
        # the reference curves take a fractional intensity; sampling strides have none
        model_e, model_c = reference_curves(rec.l_p)
        out.append(f"- reference model at this intensity: e = {model_e:.4f}, c = {model_c:.4f}")
    out.append("")
    return out


def render_markdown(report: Report) -> str:
    cfg = report.config
    out = ["# Approxify report", "",
           f"- source: {source_name(cfg)} ({report.output_kind} output)",
           f"- error class: {report.error_class.value}, bound e_b = {cfg.error_bound:g}",
           f"- platform: {cfg.platform.name}, seed {cfg.seed}",
           f"- input cases: {report.cases}; traces: {', '.join(os.path.basename(t) for t in cfg.traces)}",
           "",
           "Loop intensity is the perforation parameter l_p (truncated or skipped fraction; "
           "stride for sampling). Reduction is (1 - c) * 100.",
           "", "## Approximation sites", ""]
    out += [f"- {b.describe()}" for b in report.blocks] or ["- none"]
    out.append("")
    for run in report.runs:
        out += _md_run(run, report)
    return "\n".join(out).rstrip("\n") + "\n"


def render(report: Report) -> Dict[str, str]:
    files = {
        "sweep.csv": render_sweep(report),
        "selection.json": render_selection(report),
        "report.md": render_markdown(report),
    }
    for run in report.runs:
        files[f"events_{_cap(run.cap_uf)}.csv"] = format_event_log(run.events)
    return files


def emit_report(report: Report, out_dir: str) -> List[str]:
    files = render(report)
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {out_dir}: {exc.strerror}") from exc
    return [os.path.join(out_dir, name) for name in files]
