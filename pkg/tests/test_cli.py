import json

import pytest

from memgift.cli import main
from memgift.gift import GIFT128, encrypt_block
from memgift.layout import compile_layout, import_layout

KAT_KEY = "d0f5c59a7700d3e799028fa9f90ad837"
KAT_PT = "e39c141fa57dba43f08a85b6a91f86c1"
KAT_CT = "13ede67cbdcc3dbf400a62d6977265ea"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# encrypt / decrypt


def test_encrypt_kat_vector(capsys):
    code, out, err = run(
        capsys, "encrypt", "--key", KAT_KEY, "--pt", KAT_PT, "--ideal"
    )
    assert code == 0
    assert out.strip() == KAT_CT
    assert err == ""


def test_encrypt_local_mode_warns_and_differs(capsys):
    code, out, err = run(
        capsys, "encrypt", "--key", KAT_KEY, "--pt", KAT_PT, "--mode", "local"
    )
    assert code == 0
    assert out.strip() != KAT_CT
    assert "warning" in err.lower()


def test_encrypt_sxor_matches_reference(capsys):
    code, out, _ = run(
        capsys, "encrypt", "--scheme", "sxor", "--key", KAT_KEY, "--pt", KAT_PT
    )
    assert code == 0 and out.strip() == KAT_CT


def test_encrypt_masked_matches_reference(capsys):
    code, out, _ = run(
        capsys, "encrypt", "--key", KAT_KEY, "--pt", KAT_PT, "--mask", "b"
    )
    assert code == 0 and out.strip() == KAT_CT


def test_encrypt_malformed_hex_exits_2(capsys):
    code, _, err = run(capsys, "encrypt", "--key", "zz", "--pt", KAT_PT)
    assert code == 2 and "input error" in err


def test_encrypt_bad_device_config_exits_3(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("r_lrs = -5\n")
    code, _, err = run(
        capsys, "encrypt", "--key", KAT_KEY, "--pt", KAT_PT,
        "--device-params", str(cfg),
    )
    assert code == 3 and "configuration error" in err
    code, _, _ = run(
        capsys, "encrypt", "--key", KAT_KEY, "--pt", KAT_PT,
        "--device-params", str(tmp_path / "missing.cfg"),
    )
    assert code == 3


def test_encrypt_pt_file_and_remask(capsys, tmp_path):
    pts = tmp_path / "blocks.txt"
    blocks = ["00" * 16, "11" * 16, "22" * 16, "33" * 16]
    pts.write_text("\n".join(blocks) + "\n")
    code, out, _ = run(
        capsys, "encrypt", "--key", KAT_KEY, "--pt-file", str(pts),
        "--mask", "5", "--remask-every", "2",
    )
    assert code == 0
    key = int(KAT_KEY, 16)
    lines = out.strip().splitlines()
    assert len(lines) == 4
    for line, pt in zip(lines, blocks):
        assert int(line, 16) == encrypt_block(int(pt, 16), key, GIFT128)


def test_unknown_arguments_exit_2(capsys):
    assert run(capsys, "encrypt", "--nope")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_decrypt_reference(capsys):
    code, out, _ = run(capsys, "decrypt", "--key", KAT_KEY, "--ct", KAT_CT)
    assert code == 0 and out.strip() == KAT_PT


def test_trace_files_deterministic(capsys, tmp_path):
    t1, a1 = tmp_path / "t1.jsonl", tmp_path / "a1.jsonl"
    t2, a2 = tmp_path / "t2.jsonl", tmp_path / "a2.jsonl"
    base = [
        "encrypt", "--key", KAT_KEY, "--pt", KAT_PT, "--seed", "17",
        "--device-params",
    ]
    cfg = tmp_path / "noise.cfg"
    cfg.write_text("sigma_c2c = 0.05\n")
    for t, a in ((t1, a1), (t2, a2)):
        code, _, _ = run(
            capsys, *base, str(cfg), "--trace", str(t), "--analog-trace", str(a)
        )
        assert code == 0
    assert t1.read_bytes() == t2.read_bytes()
    assert a1.read_bytes() == a2.read_bytes()
    first = json.loads(t1.read_text().splitlines()[0])
    assert first["record"] == "session" and first["seed"] == 17


# ---------------------------------------------------------------------------
# compile-layout


def test_compile_layout_round_trip(capsys, tmp_path):
    out_file = tmp_path / "kat.layout"
    code, out, _ = run(
        capsys, "compile-layout", "--key", KAT_KEY, "--out", str(out_file)
    )
    assert code == 0 and "32 slices" in out
    assert import_layout(out_file) == compile_layout(int(KAT_KEY, 16), GIFT128)


# ---------------------------------------------------------------------------
# kat


def test_kat_command_passes(capsys, tmp_path):
    f = tmp_path / "v.kat"
    f.write_text(f"key={KAT_KEY} pt={KAT_PT} ct={KAT_CT}\n")
    code, out, _ = run(capsys, "kat", "--file", str(f))
    assert code == 0 and "1/1 passed" in out


def test_kat_command_official_files(capsys):
    from pathlib import Path

    data = Path(__file__).parent / "data"
    for name in ("gift64.kat", "gift128.kat"):
        code, out, _ = run(capsys, "kat", "--file", str(data / name))
        assert code == 0 and "3/3 passed" in out


def test_kat_command_pipeline_mode(capsys, tmp_path):
    f = tmp_path / "v.kat"
    f.write_text(f"key={KAT_KEY} pt={KAT_PT} ct={KAT_CT}\n")
    code, out, _ = run(capsys, "kat", "--file", str(f), "--pipeline", "--scheme", "sxor")
    assert code == 0 and "reference+pipeline" in out


def test_kat_command_fails_on_bad_vector(capsys, tmp_path):
    f = tmp_path / "v.kat"
    f.write_text(f"key={KAT_KEY} pt={KAT_PT} ct={'0' * 32}\n")
    code, out, _ = run(capsys, "kat", "--file", str(f))
    assert code == 1 and "0/1 passed" in out


def test_kat_command_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "kat", "--file", str(tmp_path / "none.kat"))
    assert code == 2 and "input error" in err


# ---------------------------------------------------------------------------
# energy-report


def test_energy_report_dxor_defaults(capsys, tmp_path):
    out_json = tmp_path / "report.json"
    code, out, _ = run(
        capsys, "energy-report", "--scheme", "dxor", "--json", str(out_json)
    )
    assert code == 0
    assert "241.52" in out and "60.38" in out and "0.0034" in out
    payload = json.loads(out_json.read_text())
    assert payload["scheme"] == "dxor"
    assert abs(payload["total_energy_pj"] - 241.52) < 0.01
    assert payload["area"]["total_mm2"] == pytest.approx(0.0034)


def test_energy_report_sxor(capsys):
    code, out, _ = run(capsys, "energy-report", "--scheme", "sxor")
    assert code == 0 and "1030.4" in out and "257.6" in out


def test_energy_report_bad_config(capsys, tmp_path):
    cfg = tmp_path / "e.cfg"
    cfg.write_text("nonsense = 1\n")
    code, _, err = run(capsys, "energy-report", "--params", str(cfg))
    assert code == 3 and "configuration error" in err


# ---------------------------------------------------------------------------
# sweep


def test_sweep_zero_sigma(capsys, tmp_path):
    out_file = tmp_path / "sweep.txt"
    code, _, _ = run(
        capsys, "sweep", "--sigmas", "0", "--blocks", "2", "--out", str(out_file)
    )
    assert code == 0
    lines = out_file.read_text().splitlines()
    assert lines[0].startswith("# sigma_c2c")
    sigma0 = lines[1].split()
    assert sigma0[3] == "0" and sigma0[5] == "0"  # zero bit and block errors


def test_sweep_stdout_and_bad_sigmas(capsys):
    code, out, _ = run(capsys, "sweep", "--sigmas", "0,0.1", "--blocks", "1")
    assert code == 0 and len(out.strip().splitlines()) == 3
    code, _, err = run(capsys, "sweep", "--sigmas", "zero")
    assert code == 2 and "input error" in err
