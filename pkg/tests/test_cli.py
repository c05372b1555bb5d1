from sparseplq.bench import read_csv
from sparseplq.cli import main
from sparseplq.data import load_instance


def test_gen_writes_deterministic_file(tmp_path, capsys):
    out1 = tmp_path / "a.bin"
    out2 = tmp_path / "b.bin"
    flags = [
        "gen", "--n", "30", "--p", "20", "--cov", "ar:0.8", "--signal", "fixed16",
        "--noise", "gauss:2", "--corrupt", "0.1", "--seed", "7",
    ]
    assert main(flags + ["--out", str(out1)]) == 0
    assert main(flags + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    syn = load_instance(out1)
    assert syn.inst.n == 30 and syn.inst.p == 20
    assert syn.corrupt_set.size == 3  # floor(0.1 * 30)


def test_solve_from_instance_file(tmp_path, capsys):
    inst_path = tmp_path / "inst.bin"
    main([
        "gen", "--n", "30", "--p", "16", "--noise", "gauss:1", "--corrupt", "3",
        "--seed", "1", "--out", str(inst_path),
    ])
    out_csv = tmp_path / "run.csv"
    code = main([
        "solve", "--instance", str(inst_path), "--solver", "pmm",
        "--lambda", "0.2", "--out", str(out_csv),
    ])
    assert code == 0
    summary = capsys.readouterr().out.strip().splitlines()[-1]
    assert "solver=pmm" in summary and "nz=" in summary and "l2err=" in summary
    rows = read_csv(out_csv)
    assert len(rows) == 1 and rows[0].solver == "pmm"


def test_solve_from_libsvm(tmp_path, capsys):
    data = tmp_path / "data.txt"
    data.write_text("1.0 1:1 2:0.5\n-0.5 1:0.3\n2.0 2:1\n0.1 1:0.2 2:0.1\n")
    code = main(["solve", "--libsvm", str(data), "--solver", "pmm", "--lambda", "0.1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "solver=pmm" in out and "loss=" in out


def test_solve_ipadmm_runs(tmp_path, capsys):
    code = main([
        "solve", "--n", "25", "--p", "16", "--corrupt", "2", "--seed", "3",
        "--solver", "ipadmm", "--eps", "0.5", "--kmax", "3000", "--lambda", "0.2",
    ])
    assert code == 0
    assert "solver=ipadmm" in capsys.readouterr().out


def test_unknown_flag_exits_2(capsys):
    assert main(["solve", "--bogus", "1"]) == 2
    assert main(["nonsense"]) == 2
    assert main([]) == 2


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert main(["gen", "--help"]) == 0
    out = capsys.readouterr().out
    assert "--cov" in out and "--seed" in out


def test_show_defaults(capsys):
    assert main(["--show-defaults"]) == 0
    out = capsys.readouterr().out
    assert "a = 6.0" in out
    assert "gamma1_0 = 0.1" in out
    assert "k_max = 200" in out
    assert "20000" in out


def test_runtime_error_exits_1(tmp_path, capsys):
    missing = tmp_path / "nope.bin"
    assert main(["solve", "--instance", str(missing), "--lambda", "0.1"]) == 1


def test_config_file_defaults_overridden_by_flags(tmp_path, capsys):
    cfg = tmp_path / "conf.txt"
    cfg.write_text("n = 25\np = 16\ncorrupt = 2\nseed = 5\nlambda = 0.2\n")
    out_csv = tmp_path / "r.csv"
    code = main([
        "solve", "--config", str(cfg), "--lambda", "0.3", "--out", str(out_csv),
    ])
    assert code == 0
    rows = read_csv(out_csv)
    assert rows[0].lam == 0.3  # explicit flag wins over config value


def test_sweep_and_table1_row_counts(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main([
        "sweep", "--kind", "sparsity", "--values", "0.1", "--seeds", "1",
        "--n", "25", "--p", "16", "--eps", "0.5", "--out", str(out),
    ])
    assert code == 0
    assert len(read_csv(out)) == 2

    out2 = tmp_path / "t1.csv"
    code = main([
        "table1", "--cells", "ar:0.5+gauss:4", "--p", "60", "--n", "40",
        "--sstar", "3", "--reps", "2", "--solvers", "pmm", "--out", str(out2),
    ])
    assert code == 0
    assert len(read_csv(out2)) == 3  # 2 runs + 1 average


def test_eps_search_command(tmp_path, capsys):
    out = tmp_path / "eps.csv"
    code = main([
        "eps-search", "--n", "25", "--p", "16", "--corrupt", "2", "--seed", "2",
        "--lambda", "0.2", "--lo", "0.4", "--hi", "1.2", "--grid", "3",
        "--kmax", "2000", "--out", str(out),
    ])
    assert code == 0
    assert "eps_opt=" in capsys.readouterr().out
    assert len(read_csv(out)) == 3


def test_solve_determinism(tmp_path):
    args = [
        "solve", "--n", "25", "--p", "16", "--corrupt", "2", "--seed", "11",
        "--lambda", "0.2",
    ]
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    r1, r2 = read_csv(out1)[0], read_csv(out2)[0]
    assert (r1.nz, r1.loss, r1.l2err, r1.fp, r1.fn, r1.iters) == (
        r2.nz, r2.loss, r2.l2err, r2.fp, r2.fn, r2.iters
    )
