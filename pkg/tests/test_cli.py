import filecmp
import hashlib
import json
import os

import pytest

from approxify.cli import main
from approxify.cli.config import ConfigError, config_from_dict, load_config
from approxify.cli.corpus import CORPUS_DIR, corpus, generate
from approxify.cli.files import InputFormatError, format_pgm, load_manifest, read_numbers, read_pgm
from approxify.interp import InputCase, run_continuous
from approxify.lang import parse_source

CONFIGS = os.path.join(CORPUS_DIR, "configs")


def lqi_case(delivered):
    rows = [(100 * (i + 1), d) for i, d in enumerate(delivered)]
    return InputCase(numbers=[float(x) for r in rows for x in r])


def digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def config_doc(**over):
    doc = {
        "source": os.path.join(CORPUS_DIR, "lqi.axc"),
        "inputs": os.path.join(CORPUS_DIR, "lqi", "manifest.json"),
        "error_class": "RMSE",
        "error_bound": 0.3,
        "capacitors_uf": [220],
        "traces": [os.path.join(CORPUS_DIR, "traces", "constant.csv")],
    }
    doc.update(over)
    return doc


def write_config(tmp_path, **over):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(config_doc(**over)))
    return str(path)


# -- file formats ----------------------------------------------------------------------


def test_pgm_round_trip(tmp_path):
    img = [[0, 10, 255], [7, 8, 9]]
    path = tmp_path / "a.pgm"
    path.write_text(format_pgm(img))
    assert read_pgm(path) == img


def test_pgm_rescales_and_skips_comments(tmp_path):
    path = tmp_path / "b.pgm"
    path.write_text("P2\n# comment\n2 1\n15\n0 15\n")
    assert read_pgm(path) == [[0, 255]]


@pytest.mark.parametrize("text", ["P5\n1 1\n255\n0\n", "P2\n2 2\n255\n1 2 3\n", "P2\n1 1\n255\n300\n", "P2\nx 1\n255\n0\n"])
def test_pgm_errors(tmp_path, text):
    path = tmp_path / "bad.pgm"
    path.write_text(text)
    with pytest.raises(InputFormatError):
        read_pgm(path)


def test_read_numbers(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("a,b\n1,2\n\n3.5,4\n")
    assert read_numbers(path) == [1.0, 2.0, 3.5, 4.0]
    path.write_text("1,2\nx,3\n")
    with pytest.raises(InputFormatError):
        read_numbers(path)


def test_manifest_with_ground_truth(tmp_path):
    (tmp_path / "in.csv").write_text("1,2\n")
    (tmp_path / "truth.csv").write_text("3\n")
    (tmp_path / "m.json").write_text(json.dumps({"cases": [{"id": "x", "numbers": "in.csv", "ground_truth": "truth.csv"}]}))
    (case,) = load_manifest(tmp_path / "m.json", "numeric")
    assert case.numbers == (1.0, 2.0) and case.ground_truth.value == (3.0,)


@pytest.mark.parametrize("doc", [{}, {"cases": []}, {"cases": [{"id": "a"}, {"id": "a"}]}, {"cases": [{"bogus": 1}]},
                                 {"cases": [{"numbers": "missing.csv"}]}])
def test_manifest_errors(tmp_path, doc):
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(InputFormatError):
        load_manifest(tmp_path / "m.json", "numeric")


# -- corpus ------------------------------------------------------------------------------


def test_corpus_has_three_benchmarks():
    bms = corpus()
    assert sorted(bms) == ["lqi", "strsearch", "susan"]
    assert [bms[k].program().output_decl.kind for k in ("susan", "lqi", "strsearch")] == ["image", "numeric", "numeric"]
    assert all(len(c.numbers) >= 2000 for c in bms["lqi"].cases())
    assert all(len(c.image) == 16 and len(c.image[0]) == 16 for c in bms["susan"].cases())


def test_lqi_all_delivered(benchmarks):
    out, _ = run_continuous(benchmarks["lqi"].program(), lqi_case([1] * 1000))
    assert out.value == (1.0,)


def test_lqi_alternating_matches_weighted_mean(benchmarks):
    n = 1000
    delivered = [i % 2 for i in range(n)]  # record i (0-based) has weight (i + 1) / n
    expected = sum((i + 1) * d for i, d in enumerate(delivered)) / sum(range(1, n + 1))
    out, _ = run_continuous(benchmarks["lqi"].program(), lqi_case(delivered))
    assert out.value[0] == pytest.approx(expected, rel=1e-12)


def test_string_search_counts_overlaps(benchmarks):
    def codes(*pats):
        return [float(c) for p in pats for c in [*map(ord, p), 0]]
    p = benchmarks["strsearch"].program()
    assert run_continuous(p, InputCase(text="ababa", numbers=codes("aba")))[0].value == (2.0,)
    text = "the cat sat on the mat"
    out = run_continuous(p, InputCase(text=text, numbers=codes("the", "at", "dog")))[0].value
    assert out == tuple(float(sum(text[i:].startswith(s) for i in range(len(text)))) for s in ("the", "at", "dog"))


def test_generator_reproduces_shipped_files(tmp_path):
    written = generate(str(tmp_path))
    assert len(written) >= 20
    for rel in written:
        assert filecmp.cmp(tmp_path / rel, os.path.join(CORPUS_DIR, rel), shallow=False), rel


# -- configuration ---------------------------------------------------------------------------


def test_config_relative_paths():
    cfg = load_config(os.path.join(CONFIGS, "susan.json"), env={})
    assert cfg.source == os.path.join(CORPUS_DIR, "susan.axc")
    assert cfg.capacitors_uf == (220.0, 330.0, 470.0, 680.0)
    assert cfg.error_class.value == "SSIM" and cfg.error_bound == 0.35


def test_seed_env_override():
    assert config_from_dict(config_doc(seed=3), env={"APPROXIFY_SEED": "11"}).seed == 11
    assert config_from_dict(config_doc(seed=3), env={}).sweep.seed == 3


@pytest.mark.parametrize("over,fragment", [
    ({"traces": ["/nonexistent/trace.csv"]}, "/nonexistent/trace.csv"),
    ({"error_bound": 0}, "error_bound"),
    ({"capacitors_uf": []}, "capacitors_uf"),
    ({"error_class": "PSNR"}, "PSNR"),
    ({"platform": "z80"}, "z80"),
    ({"sweep": {"bogus": 1}}, "bogus"),
    ({"extra": 1}, "extra"),
])
def test_config_errors(over, fragment):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(config_doc(**over), env={})
    assert fragment in str(exc.value)


# -- commands ------------------------------------------------------------------------------------


def test_missing_trace_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, traces=["nowhere.csv"])
    assert main(["run", "--config", cfg]) == 2
    assert "nowhere.csv" in capsys.readouterr().err


def test_bad_source_exit_code(tmp_path, capsys):
    (tmp_path / "bad.axc").write_text("func main() { x = 1; }")
    cfg = write_config(tmp_path, source="bad.axc")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 3


def test_error_class_must_fit_output(tmp_path):
    cfg = write_config(tmp_path, error_class="SSIM")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


def test_run_writes_reproducible_report(tmp_path):
    cfg = write_config(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["run", "--config", cfg, "--out", str(out2)]) == 0
    names = sorted(os.listdir(out1))
    assert names == ["events_220.csv", "report.md", "selection.json", "sweep.csv"]
    for name in names:
        assert digest(out1 / name) == digest(out2 / name)
    sel = json.loads((out1 / "selection.json").read_text())
    (cap,) = sel["capacitors"]
    chosen = cap["selected"]
    assert chosen["reduction_pct"] == round((1 - chosen["c"]) * 100, 4)
    assert chosen["e_m"] <= 0.3 and chosen["error_mode"] == "Direct"
    assert chosen["c"] == chosen["checkpoints"] / cap["baseline_checkpoints"]
    header = (out1 / "sweep.csv").read_text().splitlines()[0]
    assert header == "cap_uf,l,m,l_p,f_p,e_m,c,objective,status"
    assert f"{chosen['reduction_pct']:.4f}%" in (out1 / "report.md").read_text()


def test_no_feasible_point_exit_code(tmp_path):
    cfg = write_config(tmp_path, error_bound=1e-6)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 5
    report = (out / "report.md").read_text()
    assert "### Baseline" in report and "### Selection" not in report
    assert json.loads((out / "selection.json").read_text())["capacitors"][0]["status"] == "NoFeasiblePoint"


def test_no_viable_capacitor_exit_code(tmp_path):
    cfg = write_config(tmp_path, capacitors_uf=[1, 220])
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 4
    caps = json.loads((out / "selection.json").read_text())["capacitors"]
    assert [c["status"] for c in caps] == ["NoViableCapacitor", "ok"]


def test_sites_command(capsys):
    assert main(["sites", os.path.join(CORPUS_DIR, "susan.axc")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "b0 Function similarity memoizable"
    assert len(lines) == 4


def test_transform_command(tmp_path, capsys):
    src = os.path.join(CORPUS_DIR, "lqi.axc")
    assert main(["transform", src, "--technique", "truncation", "--intensity", "0.35", "--block", "b0"]) == 0
    text = capsys.readouterr().out
    assert "@truncate(0.35)" in text
    parse_source(text)
    assert main(["transform", src, "--technique", "memoization", "--intensity", "0.1", "--block", "b0"]) == 2
    assert main(["transform", src, "--technique", "sampling", "--intensity", "2", "--block", "b7"]) == 2


def test_simulate_command(tmp_path, capsys):
    events = tmp_path / "ev.csv"
    code = main(["simulate", "--source", os.path.join(CORPUS_DIR, "lqi.axc"),
                 "--trace", os.path.join(CORPUS_DIR, "traces", "constant.csv"), "--cap-uf", "220",
                 "--platform", "cortex-m", "--inputs", os.path.join(CORPUS_DIR, "lqi", "manifest.json"),
                 "--case", "log1", "--events", str(events)])
    assert code == 0
    assert "checkpoints=10" in capsys.readouterr().out
    assert events.read_text().startswith("time_ms,volts,event\n")


def test_every_case_used_once_per_evaluation(benchmarks, plat, traces):
    from approxify.energy import CapacitorSpec
    from approxify.search import Validator
    bm = benchmarks["susan"]
    cases = bm.cases()
    v = Validator(bm.program(), cases, plat, CapacitorSpec.from_uf(470), [traces["constant"], traces["square"]], "SSIM", 0.35)
    assert len(v.baseline.results) == len(cases) * 2
    assert len(v.baseline.outputs) == len(cases)
