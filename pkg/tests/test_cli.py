import re
import subprocess
import sys

import numpy as np
import pytest

from vvfractal import render
from vvfractal.cli import main
from vvfractal.ifs_model import preset
from vvfractal.vvariable import run

CONFIG = """\
superifs V=2
ifs A prob=1/2
  map a=1/2 b=0 c=0 d=1/2 e=0 f=0
  map a=1/2 b=0 c=0 d=1/2 e=1/2 f=0
ifs B prob=1/2
  map a=1/3 b=0 c=0 d=1/3 e=0 f=0
  map a=1/3 b=0 c=0 d=1/3 e=2/3 f=2/3
"""


def test_attractor_backward_trace(tmp_path, capsys):
    out = tmp_path / "s.pgm"
    assert main(["attractor", "--preset", "sierpinski-half", "--k", "12", "--res", "256", "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 12
    dists = [float(re.search(r"=(\S+) ratio", ln).group(1)) for ln in lines]
    assert lines[0].startswith("k=1 d_H(T0,T1)=")
    for prev, cur in zip(dists, dists[1:]):
        assert cur <= 0.5 * prev + 2 / 256 + 1e-12
    img = render.read_image(out)
    assert img.shape == (256, 256) and 0 < np.count_nonzero(img) < 256 * 256 / 2


def test_attractor_k0_echoes_initial_set(tmp_path):
    out = tmp_path / "full.pgm"
    assert main(["attractor", "--preset", "sierpinski-half", "--k", "0", "--res", "32", "--out", str(out)]) == 0
    assert np.all(render.read_image(out) == 255)


def test_attractor_chaos_png(tmp_path, capsys):
    out = tmp_path / "c.png"
    args = ["attractor", "--preset", "sierpinski-half", "--mode", "chaos", "--points", "20000",
            "--res", "64", "--out", str(out)]
    assert main(args) == 0
    assert "default seed" in capsys.readouterr().err
    assert render.read_image(out).max() == 255


def test_attractor_needs_ifs_choice(tmp_path, capsys):
    args = ["attractor", "--preset", "sierpinski-pair", "--res", "16", "--out", str(tmp_path / "x.pgm")]
    assert main(args) == 2
    assert "choose one" in capsys.readouterr().err
    assert main(args[:-2] + ["--ifs", "G", "--out", str(tmp_path / "x.pgm")]) == 0


def test_vvar_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["vvar", "--preset", "up-down", "--k", "20", "--res", "64", "--seed", "3",
                 "--out-dir", str(out), "--dump-records", "-"]) == 0
    dump = capsys.readouterr().out.splitlines()
    assert len(dump) == 20
    assert all(re.fullmatch(r"k=\d+ \| 1:[UD]\([LR],[LR]\) \| 2:[UD]\([LR],[LR]\)", ln) for ln in dump)
    names = sorted(p.name for p in out.iterdir())
    assert len(names) == 40 and names[0] == "step001_buf1.pgm" and names[-1] == "step020_buf2.pgm"


def test_vvar_V1_inputs_are_buffer_one(tmp_path):
    dump = tmp_path / "d.txt"
    assert main(["vvar", "--preset", "sierpinski-pair", "--V", "1", "--k", "6", "--res", "16",
                 "--seed", "1", "--out-dir", str(tmp_path / "o"), "--dump-records", str(dump)]) == 0
    for ln in dump.read_text().splitlines():
        parts = ln.split(" | ")
        assert len(parts) == 2
        assert re.fullmatch(r"1:[FG]\(1,1,1\)", parts[1])


def test_vvar_config_file(tmp_path):
    cfg = tmp_path / "sys.ifs"
    cfg.write_text(CONFIG)
    assert main(["vvar", "--config", str(cfg), "--k", "3", "--res", "16", "--seed", "2",
                 "--out-dir", str(tmp_path / "o"), "--measure"]) == 0
    assert len(list((tmp_path / "o").iterdir())) == 6


def test_dimension_csv_and_solve(tmp_path, capsys):
    csv = tmp_path / "g.csv"
    assert main(["dimension", "--preset", "sierpinski-pair", "--V", "2", "--alpha-grid", "1.0:1.4:0.02",
                 "--k", "400", "--chains", "8", "--seed", "5", "--csv", str(csv), "--solve"]) == 0
    rows = csv.read_text().splitlines()
    assert rows[0] == "alpha,gamma_hat,ci95,k,chains,V,seed"
    assert len(rows) == 22
    gammas = [float(r.split(",")[1]) for r in rows[1:]]
    assert all(a > b for a, b in zip(gammas, gammas[1:]))
    line = capsys.readouterr().out.strip()
    m = re.fullmatch(r"d\(V=2\) = (\d\.\d{4}) ± (\d\.\d{4}) \(95% CI\), k=400, chains=8, seed=5", line)
    assert m and abs(float(m.group(1)) - 1.241) < 0.03


def test_bare_alpha_grid_uses_default(capsys):
    assert main(["dimension", "--preset", "sierpinski-pair", "--alpha-grid", "--k", "20", "--chains", "2",
                 "--seed", "1"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert [r.split(",")[0] for r in rows[:3]] == ["1", "1.02", "1.04"] and rows[-1].startswith("1.4,")


def test_dimension_rejects_up_down(capsys):
    assert main(["dimension", "--preset", "up-down", "--solve", "--seed", "1"]) == 2
    assert "requires similitudes" in capsys.readouterr().err


def test_superpose_single_sample_is_one_necklace(tmp_path):
    out = tmp_path / "p.pgm"
    assert main(["superpose", "--preset", "up-down", "--samples", "1", "--res", "64", "--seed", "9",
                 "--out", str(out)]) == 0
    final = run(preset("up-down"), k_steps=16, seed=9, res=64).final
    np.testing.assert_array_equal(render.read_image(out), render.superpose([final]))


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["vvar", "--preset", "up-down"],
        ["vvar", "--preset", "up-down", "--config", "x", "--out-dir", "o"],
        ["dimension", "--preset", "sierpinski-pair"],
        ["dimension", "--preset", "sierpinski-pair", "--alpha-grid", "1:2"],
        ["vvar", "--preset", "up-down", "--k", "-1", "--out-dir", "o"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 1


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ifs"
    bad.write_text("superifs V=2\nifs A\n  map a=2 b=0 c=0 d=2 e=0 f=0\n")
    assert main(["vvar", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "not contractive" in capsys.readouterr().err
    bad.write_text("superifs V=2\nifs A\n  map a=0.5 b=0 c\n")
    assert main(["vvar", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert main(["vvar", "--preset", "up-down", "--V", "0", "--out-dir", str(tmp_path)]) == 2


def test_io_errors(tmp_path, capsys):
    assert main(["vvar", "--config", str(tmp_path / "nope.ifs"), "--out-dir", str(tmp_path)]) == 3
    assert "nope.ifs" in capsys.readouterr().err
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["attractor", "--preset", "sierpinski-half", "--k", "1", "--res", "8",
                 "--out", str(blocker / "x.pgm")]) == 3


def _run_all(root):
    outputs = {}
    cmds = {
        "att": ["attractor", "--preset", "sierpinski-half", "--k", "6", "--res", "64", "--out", "{d}/a.pgm"],
        "chaos": ["attractor", "--preset", "sierpinski-half", "--mode", "chaos", "--points", "5000",
                  "--res", "64", "--seed", "4", "--out", "{d}/c.png"],
        "vvar": ["vvar", "--preset", "up-down", "--k", "5", "--res", "32", "--seed", "4",
                 "--out-dir", "{d}/v", "--dump-records", "{d}/rec.txt"],
        "dim": ["dimension", "--preset", "sierpinski-pair", "--alpha-grid", "1.0:1.2:0.1", "--k", "50",
                "--chains", "4", "--seed", "4", "--csv", "{d}/g.csv"],
        "sup": ["superpose", "--preset", "fern-lettuce", "--samples", "3", "--burn-in", "2", "--res", "32",
                "--seed", "4", "--out", "{d}/s.ppm"],
    }
    for argv in cmds.values():
        assert main([a.format(d=root) for a in argv]) == 0
    for p in sorted(root.rglob("*")):
        if p.is_file():
            outputs[str(p.relative_to(root))] = p.read_bytes()
    return outputs


def test_byte_identical_reruns(tmp_path):
    first, second = tmp_path / "one", tmp_path / "two"
    first.mkdir()
    second.mkdir()
    a, b = _run_all(first), _run_all(second)
    assert a.keys() == b.keys() and len(a) == 15
    assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vvfractal", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "superpose" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "vvfractal", "dimension", "--preset", "up-down", "--solve"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "dimension machinery requires similitudes" in proc.stderr
