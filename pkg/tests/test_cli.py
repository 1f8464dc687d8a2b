import json

import pytest

from mimolink import cli


def run(argv):
    return cli.main(argv)


def test_sweep_prints_points(tmp_path, capsys):
    out = tmp_path / "pts.jsonl"
    csv = tmp_path / "pts.csv"
    rc = run(["sweep", "--scheme", "golden", "--eta", "4",
              "--frame-info-bits", "120", "--ebn0", "0,4",
              "--min-frame-errors", "3", "--max-bits", "3000",
              "--out", str(out), "--csv", str(csv)])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert "ebn0=" in lines[0] and "ber=" in lines[0]
    assert len(out.read_text().splitlines()) == 2
    assert csv.read_text().splitlines()[0].startswith("scheme,")


def test_grid_parsing():
    assert cli._parse_grid("0:0.5:2") == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert cli._parse_grid("1,3,7") == [1.0, 3.0, 7.0]
    with pytest.raises(Exception):
        cli._parse_grid("0:-1:5")


def test_required_ebn0_from_jsonl(tmp_path, capsys):
    path = tmp_path / "curve.jsonl"
    recs = [dict(ebn0_db=6.0, bits=10**6, bit_errors=1000, frames=100,
                 frame_errors=100),
            dict(ebn0_db=8.0, bits=10**6, bit_errors=10, frames=100,
                 frame_errors=10)]
    path.write_text("\n".join(json.dumps(r) for r in recs) + "\n")
    rc = run(["required-ebn0", "--from-jsonl", str(path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "required_ebn0_db=7.000" in out


def test_required_ebn0_not_reached(tmp_path, capsys):
    path = tmp_path / "curve.jsonl"
    recs = [dict(ebn0_db=0.0, bits=10**5, bit_errors=40000, frames=10,
                 frame_errors=10),
            dict(ebn0_db=1.0, bits=10**5, bit_errors=30000, frames=10,
                 frame_errors=10)]
    path.write_text("\n".join(json.dumps(r) for r in recs) + "\n")
    rc = run(["required-ebn0", "--from-jsonl", str(path)])
    assert rc == 1


def test_config_file_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scheme": "golden", "eta": 4,
                               "frame-info-bits": 120, "ebn0": "0",
                               "min-frame-errors": 2, "max-bits": 1500}))
    rc = run(["sweep", "--config", str(cfg)])
    assert rc == 0
    assert "ebn0=" in capsys.readouterr().out


def test_config_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scheme": "golden", "eta": 4,
                               "frame-info-bits": 120,
                               "ebn0": "0", "min-frame-errors": 2,
                               "max-bits": 1500}))
    rc = run(["sweep", "--config", str(cfg), "--ebn0", "1,2"])
    assert rc == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 2


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scheme": "golden", "eta": 4, "bogus": 1}))
    with pytest.raises(SystemExit, match="unknown config keys"):
        run(["sweep", "--config", str(cfg), "--ebn0", "0"])


def test_missing_scheme_exits():
    with pytest.raises(SystemExit):
        run(["sweep", "--ebn0", "0"])


def test_invalid_scenario_returns_2(capsys):
    rc = run(["sweep", "--scheme", "golden", "--eta", "4", "--rx", "2",
              "--alpha-db", "0,0,0", "--ebn0", "0"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_capacity_csv(tmp_path):
    out = tmp_path / "cap.csv"
    rc = run(["capacity", "--scheme", "golden", "--scheme", "vblast",
              "--snr-db", "0,10", "--trials", "500", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "scheme,snr_db,mean_capacity,std_err,n_trials"
    assert len(lines) == 5
    assert lines[1].startswith("golden,0,")


def test_capacity_stdout_deterministic(capsys):
    rc = run(["capacity", "--scheme", "ld", "--snr-db", "10",
              "--trials", "400", "--seed", "5"])
    first = capsys.readouterr().out
    rc2 = run(["capacity", "--scheme", "ld", "--snr-db", "10",
               "--trials", "400", "--seed", "5"])
    second = capsys.readouterr().out
    assert rc == rc2 == 0
    assert first == second
