import warnings

import pytest
from hypothesis import given, settings, strategies as st

from rbffd_ep.assembly import ConfigurationWarning
from rbffd_ep.cli import ConfigError, RunConfig, format_config, main, parse_config, run

ANNULUS_PLASTIC = """
# elasto-plastic annulus
case = annulus_plastic
approach = hybrid
h = 0.025
alpha_d = 0.5
alpha_s = 0.5
load = 8, 10.5, 0.1
sigma_y0 = 20
H = 0
e_tol = 1e-7
nri_max = 70
"""


class TestParse:
    def test_full_plastic_config(self):
        cfg = parse_config(ANNULUS_PLASTIC)
        assert cfg.approach == ("hybrid",)
        assert cfg.load == (8.0, 10.5, 0.1)
        assert cfg.sigma_y0 == 20.0 and cfg.H == 0.0
        assert cfg.benchmark().program.n_levels == 26

    def test_defaults_filled(self):
        cfg = parse_config("case = plate_hole_plastic\napproach = hybrid\nh = 0.05\n")
        assert cfg.load == (0.0, 0.1, 0.01)
        assert cfg.sigma_y0 == 0.1 and cfg.H == 0.25

    def test_empty_lists_required(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("")
        for key in ("case", "approach", "h or rho"):
            assert key in str(exc.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="^colour: unknown key"):
            parse_config("case = annulus\napproach = hybrid\nh = 0.1\ncolour = red\n")

    def test_clamp_warning(self):
        with pytest.warns(ConfigurationWarning, match="clamped"):
            cfg = parse_config("case = annulus\napproach = hybrid\nh = 0.1\n"
                               "alpha_d = 0.9\np_fd = 4\n")
        assert cfg.alpha_d == (0.5,)

    @pytest.mark.parametrize("text,key", [
        ("case = annulus_plastic\napproach = hybrid\nh = 0.1\nplane = plane_stress\n", "plane"),
        ("case = timoshenko\napproach = hybrid\nh = 0.1\nsigma_y0 = 1\n", "sigma_y0"),
        ("case = annulus\napproach = hybrid\nh = -0.1\n", "h"),
        ("case = annulus\napproach = weak\nh = 0.1\n", "approach"),
        ("case = annulus\napproach = hybrid\nh = 0.1\nm = 4\n", "m"),
        ("case = annulus\napproach = hybrid\nh = 0.1\nnu = 0.5\n", "nu"),
        ("case = annulus\napproach = hybrid\nh = 0.1\nrho = 100\n", "rho"),
        ("case = annulus_plastic\napproach = hybrid\nh = 0.1\nload = 1, 0, 0.1\n", "load"),
        ("case = annulus_plastic\napproach = hybrid\nh = 0.1\nH = -1\n", "H"),
        ("case = annulus\napproach = hybrid\nh = 0.1\nseed = x\n", "seed"),
        ("case = annulus\napproach = hybrid\nh = 0.1\nh = 0.2\n", "h"),
    ])
    def test_errors_name_the_key(self, text, key):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.key == key
        assert str(exc.value).startswith(key)

    def test_lists_for_sweeps(self):
        cfg = parse_config("case = annulus\napproach = composed, hybrid\nh = 0.066, 0.033\n"
                           "p = 2, 3\n")
        assert cfg.approach == ("composed", "hybrid")
        assert cfg.p == (2, 3)


@settings(max_examples=40, deadline=None)
@given(case=st.sampled_from(["annulus", "annulus_plastic", "timoshenko", "plate_hole_plastic"]),
       approach=st.lists(st.sampled_from(["direct", "composed", "hybrid"]), min_size=1,
                         max_size=3),
       h=st.lists(st.floats(0.01, 0.2), min_size=1, max_size=3),
       alpha_s=st.floats(0, 1), alpha_d=st.floats(0.05, 2.0), seed=st.integers(0, 99),
       p_fd=st.sampled_from([2, 4]))
def test_echo_round_trips(case, approach, h, alpha_s, alpha_d, seed, p_fd):
    text = (f"case = {case}\napproach = {', '.join(approach)}\nh = {', '.join(map(repr, h))}\n"
            f"alpha_s = {alpha_s!r}\nalpha_d = {alpha_d!r}\nseed = {seed}\np_fd = {p_fd}\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = parse_config(text)
        again = parse_config(format_config(cfg))
    assert again == cfg


class TestRun:
    def test_elastic_solve_artifacts(self, tmp_path):
        cfg = parse_config("case = annulus\napproach = hybrid\nh = 0.1\n")
        assert run("solve", cfg, tmp_path) == 0
        for name in ("nodes.txt", "field_0001.txt", "report.csv", "report.txt", "config.txt"):
            assert (tmp_path / name).exists()
        header, first = (tmp_path / "field_0001.txt").read_text().splitlines()[:2]
        assert header == "# x y u1 u2 s11 s22 s33 s12 epbar"
        assert len(first.split()) == 9
        echoed = parse_config((tmp_path / "config.txt").read_text())
        assert echoed.output == str(tmp_path)

    def test_failed_plastic_run_keeps_artifacts(self, tmp_path):
        cfg = parse_config("case = annulus_plastic\napproach = direct\nh = 0.066\n"
                           "load = 6, 10, 1\n")
        assert run("solve", cfg, tmp_path) != 0
        rows = (tmp_path / "report.csv").read_text().splitlines()[1:]
        assert rows[0].split(",")[3] == "1"
        assert rows[-1].split(",")[3] == "0"
        assert (tmp_path / "field_0001.txt").exists()
        assert not (tmp_path / f"field_{len(rows):04d}.txt").exists()

    def test_solve_rejects_lists(self, tmp_path):
        cfg = parse_config("case = annulus\napproach = hybrid\nh = 0.1, 0.05\n")
        with pytest.raises(ConfigError, match="^h:"):
            run("solve", cfg, tmp_path)

    def test_sweep_writes_metric_tables(self, tmp_path):
        cfg = parse_config("case = timoshenko\napproach = composed, hybrid\nh = 0.1, 0.05\n")
        assert run("sweep", cfg, tmp_path) == 0
        for name in ("e2.csv", "e_int.csv", "slopes.csv"):
            assert (tmp_path / name).exists()
        assert len((tmp_path / "e2.csv").read_text().splitlines()) == 5

    def test_gen_nodes(self, tmp_path):
        cfg = parse_config("case = plate_hole\napproach = hybrid\nh = 0.1\n")
        assert run("gen-nodes", cfg, tmp_path) == 0
        assert len((tmp_path / "nodes.txt").read_text().splitlines()) > 100

    def test_identical_runs_are_byte_identical(self, tmp_path):
        cfg = parse_config("case = annulus\napproach = composed\nh = 0.1\nseed = 7\n")
        run("solve", cfg, tmp_path / "a")
        run("solve", cfg, tmp_path / "b")
        for name in ("nodes.txt", "field_0001.txt", "report.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestMain:
    def test_missing_config(self, capsys):
        assert main(["solve"]) == 2
        assert "--config" in capsys.readouterr().err

    def test_bad_config_reports_path(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("case = annulus\n")
        assert main(["solve", "--config", str(p)]) == 2
        err = capsys.readouterr().err
        assert "bad.cfg" in err and "approach" in err

    def test_unreadable_config(self, tmp_path, capsys):
        assert main(["solve", "--config", str(tmp_path / "none.cfg")]) == 2
        assert "none.cfg" in capsys.readouterr().err

    def test_seed_and_threads_flags(self, tmp_path):
        p = tmp_path / "a.cfg"
        p.write_text("case = annulus\napproach = hybrid\nh = 0.1\n")
        out = tmp_path / "out"
        assert main(["gen-nodes", "--config", str(p), "--out", str(out), "--seed", "5",
                     "--threads", "1"]) == 0
        assert "seed = 5" in (out / "config.txt").read_text()

    def test_unwritable_output(self, tmp_path, capsys):
        p = tmp_path / "a.cfg"
        p.write_text("case = annulus\napproach = hybrid\nh = 0.1\n")
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["gen-nodes", "--config", str(p), "--out", str(blocker / "sub")]) == 2
        assert "file" in capsys.readouterr().err


def test_run_config_requires_validation_path():
    # RunConfig is a plain record; parse_config is the validating entry point
    cfg = RunConfig(case="annulus", approach=("hybrid",), h=(0.1,))
    assert cfg.spacings == (0.1,)
