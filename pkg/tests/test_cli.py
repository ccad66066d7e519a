import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fpremoval.cli import run
from fpremoval.counting import Colouring
from fpremoval.fileio import (
    FormatError,
    decode_colouring,
    encode_colouring,
    generate_colouring,
    read_colouring,
    write_colouring,
)
from fpremoval.gf import space

FIXTURES = Path(__file__).parent / "fixtures"
SCHUR_2 = {"p": 2, "r": 2, "forms": [[1, 0], [0, 1], [1, 1]], "colourings": [[2, 2, 2]]}
BAD_F7 = {"p": 7, "r": 2, "forms": [[1, 0], [0, 1], [5, 5]], "colourings": [[1, 1, 1], [2, 2, 2]]}


def strip(report):
    return {k: v for k, v in report.items() if k != "timings"}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        if isinstance(obj, Colouring):
            write_colouring(path, obj)
        elif isinstance(obj, bytes):
            path.write_bytes(obj)
        else:
            path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    write.dir = tmp_path
    return write


class TestFileFormat:
    def test_layout(self):
        phi = Colouring.of(np.array([1, 2, 2, 1]), 2, 2, 2)
        assert encode_colouring(phi) == b"FPNC\x01\x02\x02\x02\x01\x02\x02\x01"

    def test_round_trip_fuzz(self, tmp_path):
        rng = np.random.default_rng(0)
        for i in range(200):
            p = int(rng.choice([2, 3, 5, 7]))
            n = int(rng.integers(0, {2: 9, 3: 6, 5: 4, 7: 3}[p]))
            r = int(rng.integers(1, 6))
            phi = Colouring.of(rng.integers(1, r + 1, p**n), p, n, r)
            path = tmp_path / f"c{i}.fpnc"
            write_colouring(path, phi)
            data = path.read_bytes()
            back = read_colouring(path)
            assert back == phi and encode_colouring(back) == data

    @pytest.mark.parametrize(
        "data",
        [b"FPNX\x01\x02\x01\x02\x01\x01", b"FPNC\x02\x02\x01\x02\x01\x01", b"FPNC\x01\x04\x01\x02" + b"\x01" * 4,
         b"FPNC\x01\x02\x02\x02\x01\x01\x01", b"FPNC\x01\x02\x01\x02\x01\x03", b"FPN"],
    )
    def test_malformed(self, data):
        with pytest.raises(FormatError):
            decode_colouring(data)


class TestGen:
    def test_deterministic(self, files):
        a, b = files("a.fpnc", b""), files("b.fpnc", b"")
        assert run(["gen", "--p", "3", "--n", "4", "--r", "3", "--seed", "5", "-o", a])[0] == 0
        assert run(["gen", "--p", "3", "--n", "4", "--r", "3", "--seed", "5", "-o", b])[0] == 0
        assert Path(a).read_bytes() == Path(b).read_bytes()

    def test_constant(self, files):
        out = files("c.fpnc", b"")
        run(["gen", "--p", "2", "--n", "5", "--r", "1", "-o", out])
        assert (read_colouring(out).table == 1).all()

    def test_sparse_count(self, files):
        out = files("s.fpnc", b"")
        code, rep = run(["gen", "--p", "2", "--n", "12", "--r", "2", "--seed", "7", "--mode", "sparse:2:1/100", "-o", out])
        assert code == 0 and rep["results"]["colour_counts"]["2"] == 41
        assert int((read_colouring(out).table == 2).sum()) == 41

    @pytest.mark.parametrize("mode", ["sparse:2:3/2", "sparse:3:1/2", "sparse:2:x", "stripes"])
    def test_invalid_mode(self, files, mode):
        out = files("x.fpnc", b"")
        assert run(["gen", "--p", "2", "--n", "3", "--r", "2", "--mode", mode, "-o", out])[0] == 2

    def test_not_prime(self, files):
        assert run(["gen", "--p", "4", "--n", "2", "--r", "2", "-o", files("x.fpnc", b"")])[0] == 2


class TestCheckPr:
    def test_schur(self, files):
        code, rep = run(["check-pr", files("s.json", SCHUR_2)])
        assert code == 0 and rep["results"]["partition_regular"]

    def test_not_regular(self, files):
        code, rep = run(["check-pr", files("b.json", BAD_F7)])
        assert code == 1 and rep["results"]["message"] == "not partition-regular"

    def test_truncated(self, files):
        assert run(["check-pr", files("t.json", json.dumps(SCHUR_2)[:20])])[0] == 2

    def test_missing_file(self, files):
        assert run(["check-pr", str(files.dir / "nope.json")])[0] == 2


class TestDensity:
    def test_fixture(self):
        code, rep = run(["density", str(FIXTURES / "schur_mixed_f3.json"), str(FIXTURES / "uniform_f3_4.fpnc")])
        oracle = json.loads((FIXTURES / "density_oracle.json").read_text())["density"]
        assert code == 0 and rep["results"]["density"] == oracle

    def test_trivial(self, files):
        import itertools

        col = files("c.fpnc", Colouring.constant(2, 3, 3, 2))
        every = dict(SCHUR_2, p=3, colourings=[list(c) for c in itertools.product((1, 2), repeat=3)])
        assert run(["density", files("all.json", every), col])[1]["results"]["density"] == "1/1"
        empty = dict(SCHUR_2, p=3, colourings=[])
        assert run(["density", files("none.json", empty), col])[1]["results"]["density"] == "0/1"

    def test_mismatch(self, files):
        col = files("c.fpnc", Colouring.constant(1, 3, 3, 2))
        assert run(["density", files("s.json", SCHUR_2), col])[0] == 2


class TestArl:
    def test_constant(self, files):
        code, rep = run(["arl", files("c.fpnc", Colouring.constant(1, 2, 6, 2)), "--epsilon", "3/10"])
        assert code == 0 and rep["results"]["codim"] == 0

    def test_hyperplane(self, files):
        sp = space(2, 8)
        pts = sp.coords(np.arange(256))
        phi = Colouring.of(np.where((pts @ np.array([1, 1, 0, 1, 0, 0, 1, 0])) % 2 == 0, 1, 2), 2, 8, 2)
        trace = files.dir / "trace.json"
        code, rep = run(["arl", files("h.fpnc", phi), "--epsilon", "0.3", "--trace", str(trace)])
        assert code == 0 and rep["results"]["codim"] <= 1 and rep["results"]["irregular_fraction"] == "0/1"
        assert json.loads(trace.read_text())
        again = run(["arl", files("h.fpnc", phi), "--epsilon", "0.3"])[1]
        assert strip(again) == strip(rep)

    def test_cap(self, files, monkeypatch):
        path = files("c.fpnc", generate_colouring(2, 8, 2, 1))
        monkeypatch.setenv("FPN_MAX_POINTS", "16")
        code, rep = run(["arl", path, "--epsilon", "1/4"])
        assert code == 3 and "FPN_MAX_POINTS=16" in rep["error"]

    def test_budget(self, files):
        path = files("c.fpnc", generate_colouring(2, 8, 2, 1, "sparse:2:1/8"))
        code, rep = run(["arl", path, "--epsilon", "1/100", "--max-codim", "0"])
        assert code == 4 and not rep["results"]["regular"]


class TestRecolourVerify:
    def test_trivial(self, files):
        col = files("c.fpnc", Colouring.constant(1, 2, 8, 2))
        out = str(files.dir / "out.fpnc")
        code, _ = run(["recolour", files("s.json", SCHUR_2), col, "--epsilon", "1/4", "-o", out])
        assert code == 0 and Path(out).read_bytes() == Path(col).read_bytes()

    def test_tiny(self, files):
        col = files("c.fpnc", generate_colouring(2, 3, 2, 0))
        report = files.dir / "r.json"
        code, rep = run(["recolour", files("s.json", SCHUR_2), col, "--epsilon", "1/4", "-o", str(files.dir / "o"),
                         "--report", str(report)])
        assert code == 4 and rep["results"]["error"].startswith("selection failed")
        assert json.loads(report.read_text())["results"]["success"] is False

    def test_engineered_agreement(self, files):
        col = files("c.fpnc", b"")
        run(["gen", "--p", "2", "--n", "12", "--r", "2", "--seed", "7", "--mode", "sparse:2:1/100", "-o", col])
        pat = files("s.json", SCHUR_2)
        out = str(files.dir / "out.fpnc")
        code, rec = run(["recolour", pat, col, "--epsilon", "1/4", "--seed", "3", "-o", out])
        assert code == 0
        vcode, ver = run(["verify", pat, col, out, "--epsilon", "1/4"])
        assert vcode == 0
        for key in ("input_density", "output_density", "changed_count", "changed_fraction", "success"):
            assert rec["results"][key] == ver["results"][key]
        again = run(["recolour", pat, col, "--epsilon", "1/4", "--seed", "3", "-o", out])[1]
        assert strip(again) == strip(rec)

    def test_verify_identity(self, files):
        col = files("c.fpnc", generate_colouring(2, 6, 2, 4))
        pat = files("s.json", SCHUR_2)
        code, rep = run(["verify", pat, col, col, "--epsilon", "0"])
        assert code == 1 and rep["results"]["witness"] is not None
        assert rep["results"]["change_within_epsilon"]

    def test_verify_mismatch(self, files):
        pat = files("s.json", SCHUR_2)
        a = files("a.fpnc", generate_colouring(2, 6, 2, 4))
        b = files("b.fpnc", generate_colouring(2, 5, 2, 4))
        assert run(["verify", pat, a, b, "--epsilon", "1/4"])[0] == 2


class TestEntryPoint:
    def test_module_main(self, files):
        path = files("s.json", SCHUR_2)
        proc = subprocess.run([sys.executable, "-m", "fpremoval.cli", "check-pr", path], capture_output=True, text=True)
        assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "check-pr"

    def test_usage_error(self):
        assert run(["recolour"])[0] == 2
