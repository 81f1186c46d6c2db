import pytest

from dgns.cli import (ConfigError, RunConfig, config_to_lines, main,
                      parse_config_lines)


def test_config_round_trip():
    cfg = RunConfig(kind="convergence", example="ex2", eps=1, sigma=20.0,
                    mu=0.1, n_list=(2, 4), dt_policy="explicit", dt=0.05,
                    t_final=0.5, outdir="somewhere", seed=3, vtk=True)
    parsed = parse_config_lines(config_to_lines(cfg))
    assert parsed == cfg


def test_config_parse_errors():
    with pytest.raises(ConfigError):
        parse_config_lines(["nonsense line"])
    with pytest.raises(ConfigError):
        parse_config_lines(["unknown_key = 3"])
    with pytest.raises(ConfigError):
        parse_config_lines(["mu = not-a-number"])
    # comments and blank lines are fine
    cfg = parse_config_lines(["# comment", "", "mu = 0.5  # inline"])
    assert cfg.mu == 0.5


def test_config_validation_rules():
    with pytest.raises(ConfigError):
        RunConfig(kind="cavity", example="ex1").validate()
    with pytest.raises(ConfigError):
        RunConfig(kind="convergence", example="cavity").validate()
    with pytest.raises(ConfigError):
        RunConfig(dt_policy="explicit", dt=None).validate()
    with pytest.raises(ConfigError):
        RunConfig(kp=3, k=1).validate()
    with pytest.raises(ConfigError):
        RunConfig(sigma=-1.0).validate()
    with pytest.raises(ConfigError):
        RunConfig(n_list=()).validate()


def test_missing_config_file_is_config_error(tmp_path):
    code = main(["convergence", "--config", str(tmp_path / "nope.cfg")])
    assert code == 2


def test_bad_cli_values_exit_2(tmp_path):
    assert main(["convergence", "--n", "4,x", "--out", str(tmp_path)]) == 2
    assert main(["run", "--example", "ex1", "--dt-policy", "explicit",
                 "--out", str(tmp_path)]) == 2


def test_convergence_run_outputs(tmp_path):
    out = tmp_path / "conv"
    argv = ["convergence", "--example", "ex1", "--n", "2,4",
            "--out", str(out), "--seed", "1"]
    assert main(argv) == 0
    csv = (out / "convergence.csv").read_text().splitlines()
    assert csv[0] == "h,energy_err,energy_rate,l2_err,l2_rate,p_err,p_rate"
    assert len(csv) == 3
    first = csv[1].split(",")
    assert first[0] == "0.5" and first[2] == ""

    # bit-identical rerun
    out2 = tmp_path / "conv2"
    assert main(["convergence", "--example", "ex1", "--n", "2,4",
                 "--out", str(out2), "--seed", "1"]) == 0
    assert (out / "convergence.csv").read_text() == \
        (out2 / "convergence.csv").read_text()

    # the metadata echo parses back into the same configuration
    meta = (out / "run_metadata.txt").read_text().splitlines()
    echoed = parse_config_lines([l for l in meta if not l.startswith("#")])
    assert echoed.example == "ex1"
    assert echoed.n_list == (2, 4)
    assert echoed.kind == "convergence"
    rerun_dir = tmp_path / "conv3"
    echoed2 = parse_config_lines([l for l in meta if not l.startswith("#")],
                                 RunConfig())
    assert echoed2 == echoed


def test_convergence_numerical_failure_exit_code(tmp_path):
    # an unreachable solver tolerance forces a numerical failure per row
    out = tmp_path / "fail"
    code = main(["convergence", "--example", "ex1", "--n", "2",
                 "--rtol", "1e-300", "--out", str(out)])
    assert code == 1
    csv = (out / "convergence.csv").read_text()
    assert "failed" in csv


def test_single_run_with_vtk(tmp_path):
    out = tmp_path / "single"
    argv = ["run", "--example", "ex1", "--n", "2", "--dt", "0.25",
            "--vtk", "--dump-mesh", "--out", str(out)]
    assert main(argv) == 0
    vtk = (out / "state.vtk").read_text().splitlines()
    assert vtk[0].startswith("# vtk DataFile")
    assert "DATASET UNSTRUCTURED_GRID" in vtk[3]
    assert any(l.startswith("VECTORS velocity") for l in vtk)
    assert any(l.startswith("SCALARS pressure") for l in vtk)
    mesh_vtk = (out / "mesh.vtk").read_text()
    assert "CELL_TYPES" in mesh_vtk
    assert (out / "run_metadata.txt").exists()


def test_cavity_run_outputs(tmp_path):
    out = tmp_path / "cavity"
    argv = ["cavity", "--n", "4", "--mu", "0.05", "--sigma", "40",
            "--dt", "0.25", "--T", "5.0", "--out", str(out)]
    assert main(argv) == 0
    for name, col in (("centerline_u1.csv", "y,u1_unsteady,u1_steady"),
                      ("centerline_u2.csv", "x,u2_unsteady,u2_steady"),
                      ("centerline_p.csv", "x,p_unsteady,p_steady")):
        lines = (out / name).read_text().splitlines()
        assert lines[0] == col
        assert len(lines) == 102  # 101 sample points
    # lid-adjacent sample approaches the moving-lid data
    rows = [l.split(",") for l in
            (out / "centerline_u1.csv").read_text().splitlines()[1:]]
    top = [float(r[1]) for r in rows if r[0] == "1"][0]
    bottom = [float(r[1]) for r in rows if r[0] == "0"][0]
    assert abs(top - 1.0) < 0.2
    assert abs(bottom) < 0.05


def test_snapshot_dumps(tmp_path):
    out = tmp_path / "snaps"
    argv = ["run", "--example", "ex1", "--n", "2", "--dt", "0.25",
            "--vtk", "--snapshots", "0.5,1.0", "--out", str(out)]
    assert main(argv) == 0
    assert (out / "state_t0.5.vtk").exists()
    assert (out / "state_t1.vtk").exists()


def test_steady_run_outputs(tmp_path):
    out = tmp_path / "steady"
    argv = ["steady", "--n", "4", "--mu", "0.05", "--sigma", "40",
            "--out", str(out)]
    assert main(argv) == 0
    lines = (out / "centerline_u1.csv").read_text().splitlines()
    assert lines[0] == "y,u1_steady"
    assert len(lines) == 102


def test_verify_subcommand():
    assert main(["verify", "--seed", "0"]) == 0
