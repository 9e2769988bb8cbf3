import csv

import pytest

from risjoint.cli import EXIT_ABORTED, EXIT_CONFIG, EXIT_OK, main

TINY = "risjoint-config 1\nname = tiny\nK = 8\nN = 4\nM = 4\nT = 16\nP = 4\ntrials = 2\n" \
       "snr_grid_db = 10, 20\nmethods = proposed, genie_ls\n"
BROKEN = "risjoint-config 1\nname = broken\nK = 4\nN = 2\nM = 4\nT = 8\nP = 2\ntrials = 2\n" \
         "snr_grid_db = 10\nmethods = genie_ls\n"


def write(tmp_path, text, name="c.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestRun:
    def test_config_run(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["run", "--config", write(tmp_path, TINY), "--out", str(out), "--per-trial"])
        assert rc == EXIT_OK
        assert sorted(p.name for p in out.iterdir()) == \
            ["tiny.cfg", "tiny.csv", "tiny.svg", "tiny_trials.csv"]
        with open(out / "tiny.csv", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert all(r["wall_time"] == "" for r in rows)
        assert "tiny.csv" in capsys.readouterr().out

    def test_preset_with_overrides(self, tmp_path):
        rc = main(["run", "--preset", "fig3", "--trials", "1", "--seed", "4",
                   "--methods", "genie_ls", "--timing", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        with open(tmp_path / "fig3.csv", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 7
        assert {r["method"] for r in rows} == {"genie_ls"}
        assert all(float(r["wall_time"]) >= 0 for r in rows)

    def test_seed_reproducible(self, tmp_path):
        cfg = write(tmp_path, TINY)
        for d in ("a", "b"):
            assert main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == EXIT_OK
        assert (tmp_path / "a" / "tiny.csv").read_bytes() == (tmp_path / "b" / "tiny.csv").read_bytes()

    def test_sweep_files(self, tmp_path):
        cfg = TINY.replace("methods = proposed, genie_ls", "methods = genie_ls") + "sweep = M: 2, 4\n"
        assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
        assert sorted(p.name for p in (tmp_path / "o").iterdir()) == \
            ["tiny.cfg", "tiny.svg", "tiny_M=2.csv", "tiny_M=4.csv"]

    @pytest.mark.parametrize("argv", [
        ["run"],
        ["run", "--preset", "fig9"],
        ["run", "--preset", "fig3", "--methods", "magic"],
        ["run", "--preset", "fig3", "--trials", "0"],
        ["run", "--preset", "fig3", "--workers", "0"],
        ["run", "--config", "/nonexistent/x.cfg"],
    ])
    def test_config_errors(self, argv, tmp_path, capsys):
        assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG
        assert "error:" in capsys.readouterr().err

    def test_bad_config_file(self, tmp_path):
        path = write(tmp_path, "risjoint-config 1\nbogus = 1\n")
        assert main(["run", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_abort_writes_partial(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["run", "--config", write(tmp_path, BROKEN), "--out", str(out)]) == EXIT_ABORTED
        assert (out / "broken.csv").exists()
        assert "aborted" in capsys.readouterr().err


class TestMeta:
    def test_presets_list(self, capsys):
        assert main(["presets", "list"]) == EXIT_OK
        names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
        assert names == ["fig3", "fig4", "fig5", "fig6"]

    def test_presets_show(self, capsys):
        assert main(["presets", "show", "fig6"]) == EXIT_OK
        assert "sweep = beta: 0.1, 0.2, 0.3, 0.5" in capsys.readouterr().out

    def test_presets_show_unknown(self):
        assert main(["presets", "show", "fig9"]) == EXIT_CONFIG

    def test_version(self, capsys):
        assert main(["version"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("risjoint ")
