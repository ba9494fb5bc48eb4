import io
from pathlib import Path

import pytest

from arakelov import cli
from arakelov.cli import COLUMNS, main, parse_run_config, run

GOLDEN = Path(__file__).parent / "golden"

# command name -> argv; outputs are pinned under tests/golden/<name>.txt
GOLDEN_RUNS = {
    "theta": ["theta", "--tau", "i", "--z", "0", "--z", "0.3+0.4i", "--z", "0.5+0.5i"],
    "theta_g2": ["theta", "--omega", "{omega}", "--z", "0.1+0.2i,0.3-0.1i"],
    "hx": ["hx", "--tau", "i", "--samples", "4000", "--seed", "3"],
    "an": ["an", "--tau", "i", "--x", "0", "--n", "16", "--samples", "2000", "--seed", "3"],
    "green": ["green", "--tau", "0.5+1.5i", "--x", "0.3+0.2i", "--y", "0.7+0.5i"],
    "atlas": ["atlas", "--tau", "i", "--r1", "0.3", "--r2", "0.45"],
    "fay": ["fay", "--tau", "0.4+1.3i", "--n", "3", "--trials", "4", "--seed", "5"],
    "bound": ["bound", "--tau", "i", "--n", "10", "--hx-samples", "4000"],
    "verify": ["verify", "--tau", "i", "--n", "8", "--trials", "20", "--hx-samples", "4000", "--seed", "2"],
    "merkl-c0": ["merkl-c0", "--m", "2", "--r1", "0.75", "--M", "2", "--C1", "1"],
}


@pytest.fixture(scope="module")
def omega_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("om") / "omega.txt"
    p.write_text("2\n1i 0.2\n0.2 1.5i\n")
    return p


def _argv(name, omega_file):
    return [str(omega_file) if a == "{omega}" else a for a in GOLDEN_RUNS[name]]


def _run(argv) -> tuple[int, str]:
    buf = io.StringIO()
    status = run(parse_run_config(argv), buf)
    return status, buf.getvalue()


def _body(text: str) -> str:
    # the first line records the invocation and may contain temp paths
    return text.split("\n", 1)[1]


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden(name, omega_file):
    status, out = _run(_argv(name, omega_file))
    assert status == 0
    expected = (GOLDEN / f"{name}.txt").read_text(encoding="utf-8")
    assert _body(out) == expected


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_reproducible_across_reruns_and_threads(name, omega_file):
    argv = _argv(name, omega_file)
    outs = {_run(argv + ["--threads", t])[1] for t in ("1", "1", "4")}
    assert len(outs) == 1


@pytest.mark.parametrize("command", sorted({a[0] for a in GOLDEN_RUNS.values()} - {"atlas"}))
def test_schema_header(command, omega_file):
    runs = [n for n, a in GOLDEN_RUNS.items() if a[0] == command]
    _, out = _run(_argv(runs[0], omega_file))
    lines = out.splitlines()
    assert lines[0].startswith(f"# arakelov {command} ")
    assert lines[1] == ",".join(COLUMNS[command])


def test_header_has_no_timestamp():
    _, out = _run(GOLDEN_RUNS["merkl-c0"])
    assert out.splitlines()[0] == "# arakelov merkl-c0 seed=0 C1=1.0 M=2.0 m=2 r1=0.75"


def test_bound_default_atlas_is_reported():
    _, out = _run(["bound", "--tau", "i", "--n", "10", "--hx-samples", "2000"])
    assert "[breakdown]" in out and "[atlas]" in out
    assert "r1 = 0.3\n" in out and "r2 = 0.45\n" in out


def test_bound_with_atlas_file(tmp_path):
    path = tmp_path / "atlas.txt"
    assert main(["atlas", "--tau", "i", "--output", str(path)]) == 0
    body = path.read_text().split("\n", 1)[1]
    path.write_text(body)
    _, out = _run(["bound", "--tau", "i", "--n", "10", "--hx-samples", "2000", "--atlas", str(path)])
    _, default = _run(["bound", "--tau", "i", "--n", "10", "--hx-samples", "2000"])
    assert _body(out) == _body(default)


def test_atlas_for_wrong_surface(tmp_path, capsys):
    path = tmp_path / "atlas.txt"
    main(["atlas", "--tau", "i", "--output", str(path)])
    assert main(["bound", "--tau", "2i", "--n", "4", "--hx-samples", "2000", "--atlas", str(path)]) == 2


class TestExitCodes:
    def test_malformed_omega(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("2\n1i 0.2\n0.2\n")
        assert main(["hx", "--omega", str(p)]) == 2
        assert f"{p}:3" in capsys.readouterr().err

    def test_asymmetric_omega(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("2\n1i 2\n0 1i\n")
        assert main(["theta", "--omega", str(p), "--z", "0,0"]) == 2

    def test_bad_range(self, capsys):
        assert main(["merkl-c0", "--m", "2", "--r1", "0.4", "--M", "2", "--C1", "1"]) == 2

    def test_bad_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["green", "--tau", "i", "--x", "nonsense", "--y", "0"])
        assert exc.value.code == 2

    def test_coincident_points(self, capsys):
        assert main(["green", "--tau", "i", "--x", "0.2", "--y", "1.2"]) == 2

    def test_missing_tau(self, capsys):
        assert main(["green", "--x", "0.2", "--y", "0.1"]) == 2

    def test_violation_exit(self, monkeypatch, capsys):
        from arakelov import elkies

        real = elkies.verify_theorem1

        def broken(*a, **k):
            res = real(*a, **k)
            s = res.summaries[0]
            bad = type(s)(s.kind, s.trials, 1, s.min_slack, s.median_slack, s.max_energy)
            return type(res)(res.n, res.bound, (bad,) + res.summaries[1:])

        monkeypatch.setattr(elkies, "verify_theorem1", broken)
        assert main(["verify", "--tau", "i", "--n", "4", "--trials", "5", "--hx-samples", "2000"]) == 1

    def test_fay_violation_exit(self, monkeypatch, capsys):
        monkeypatch.setattr(cli.fay, "lemma41_inequality", lambda *a: -1.0)
        assert main(["fay", "--tau", "i", "--n", "2", "--trials", "2"]) == 1


class TestConfig:
    def test_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# hx run\ntau = 2i\nsamples = 1500  # small\n")
        _, from_file = _run(["hx", "--config", str(cfg)])
        _, flags = _run(["hx", "--tau", "2i", "--samples", "1500"])
        assert _body(from_file) == _body(flags)
        _, override = _run(["hx", "--config", str(cfg), "--samples", "3000"])
        assert ",3000," in override

    def test_required_value_from_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("tau = i\nx = 0.1\ny = 0.3+0.2i\n")
        status, out = _run(["green", "--config", str(cfg)])
        assert status == 0 and "0.1,0.0,0.3,0.2," in out

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("tau = i\nfoo = 1\n")
        assert main(["hx", "--config", str(cfg)]) == 2
        assert "run.cfg:2" in capsys.readouterr().err

    def test_bad_value(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("tau = i\nsamples = many\n")
        assert main(["hx", "--config", str(cfg)]) == 2


def test_output_file(tmp_path):
    out = tmp_path / "green.csv"
    assert main(["green", "--tau", "i", "--x", "0.1", "--y", "0.3i", "--output", str(out)]) == 0
    assert out.read_text(encoding="utf-8").splitlines()[1] == ",".join(COLUMNS["green"])


def test_suite_command_quick():
    status, out = _run(["suite", "--tau", "i", "--seed", "7", "--quick"])
    lines = out.splitlines()
    assert lines[1] == ",".join(COLUMNS["suite"])
    rows = lines[2:]
    assert len(rows) == 13
    passed = [r.split(",")[1] == "true" for r in rows]
    assert status == (0 if all(passed) else 1)
