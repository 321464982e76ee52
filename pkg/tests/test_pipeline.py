import io
import random

import numpy as np
import pytest

from memgift.crossbar import DeviceParams
from memgift.gift import (
    GIFT64,
    GIFT128,
    RoundConstantState,
    add_round_key_and_constant,
    encrypt_block,
    extract_round_key,
    perm_bits,
    sub_cells,
)
from memgift.pipeline import (
    EncryptionSession,
    PipelineError,
    encrypt,
    export_analog_trace,
    export_round_trace,
    format_sweep_table,
    initialize_session,
    run_sweep,
    step_round,
)

RNG = random.Random(30)


def expected_write_count(variant):
    rc, plain = 7, variant.nibbles - 7
    return plain * (64 + 2 * variant.rounds) + rc * (64 + 3 * variant.rounds)


# ---------------------------------------------------------------------------
# Initialization


def test_write_event_count(variant):
    session = initialize_session(0, variant, "dxor")
    assert session.write_log.get("cell_write") == expected_write_count(variant)
    assert expected_write_count(GIFT128) == (16 * 4 + 40 * 2) * 32 + 40 * 7


def test_reinit_same_seed_same_resistances():
    params = DeviceParams(sigma_d2d=0.04, seed=77)
    key = RNG.getrandbits(128)
    a = EncryptionSession(key, GIFT128, "sxor", params)
    b = EncryptionSession(key, GIFT128, "sxor", params)
    for sa, sb in zip(a.slices, b.slices):
        assert np.array_equal(sa.sb_res, sb.sb_res)
        assert np.array_equal(sa.key_res, sb.key_res)


def test_no_reads_before_first_encrypt():
    session = initialize_session(1, GIFT128, "dxor")
    assert session.reads_executed == 0
    assert session.current_log.rounds == 0


def test_bad_modes_rejected():
    with pytest.raises(PipelineError):
        EncryptionSession(0, GIFT128, "dxor", feedback="ring")
    with pytest.raises(Exception):
        EncryptionSession(0, GIFT128, "qxor")


# ---------------------------------------------------------------------------
# Single round


def test_round_zero_matches_reference(variant):
    key = RNG.getrandbits(128)
    pt = RNG.getrandbits(variant.block_bits)
    session = initialize_session(key, variant, "sxor")
    got = step_round(session, pt)
    rk = extract_round_key(key, variant)
    rc = RoundConstantState.initial()
    want = add_round_key_and_constant(
        perm_bits(sub_cells(pt, variant), variant), rk, rc, variant
    )
    assert got == want
    assert session.round_counter == 1
    assert session.output_register.bits == got


def test_step_past_final_round_rejected():
    session = initialize_session(0, GIFT64, "dxor")
    state = 0
    for _ in range(GIFT64.rounds):
        state = session.step_round(state)
    with pytest.raises(PipelineError):
        session.step_round(state)


def test_local_mode_is_slice_local():
    key = RNG.getrandbits(128)
    session = EncryptionSession(key, GIFT128, "dxor", feedback="local")
    # nibble j output depends only on nibble j input
    for j in (0, 5, 31):
        base = RNG.getrandbits(128)
        out_base = session._step_fast(
            np.array([(base >> i) & 1 for i in range(128)], dtype=np.uint8), 0
        )[0]
        for nib in range(16):
            tweaked = (base & ~(0xF << (4 * j))) | (nib << (4 * j))
            out = session._step_fast(
                np.array([(tweaked >> i) & 1 for i in range(128)], dtype=np.uint8), 0
            )[0]
            changed = {
                k // 4 for k in range(128) if out[k] != out_base[k]
            }
            assert changed <= {j}


# ---------------------------------------------------------------------------
# Whole blocks


@pytest.mark.parametrize("scheme", ["sxor", "dxor"])
def test_pipeline_matches_reference(variant, scheme, kat64, kat128):
    vectors = kat64 if variant is GIFT64 else kat128
    for vec in vectors:
        session = initialize_session(vec.key, variant, scheme)
        ct, _ = encrypt(session, vec.pt)
        assert ct == vec.ct
    for _ in range(20):
        key = RNG.getrandbits(128)
        pt = RNG.getrandbits(variant.block_bits)
        session = initialize_session(key, variant, scheme)
        ct, _ = encrypt(session, pt)
        assert ct == encrypt_block(pt, key, variant)


def test_local_mode_fails_reference(kat128):
    vec = kat128[1]
    session = initialize_session(vec.key, GIFT128, "dxor", feedback_mode="local")
    ct, _ = encrypt(session, vec.pt)
    assert ct != vec.ct


def test_local_mode_confines_plaintext_flip_to_one_slice():
    key = RNG.getrandbits(128)
    pt = RNG.getrandbits(128)
    bit = RNG.randrange(128)
    a = EncryptionSession(key, GIFT128, "dxor", feedback="local")
    b = EncryptionSession(key, GIFT128, "dxor", feedback="local")
    _, traces_a = a.encrypt(pt, trace=True)
    _, traces_b = b.encrypt(pt ^ (1 << bit), trace=True)
    touched = set()
    for ta, tb in zip(traces_a, traces_b):
        for j, (oa, ob) in enumerate(zip(ta.output_nibbles, tb.output_nibbles)):
            if oa != ob:
                touched.add(j)
    assert touched == {bit // 4}


def test_permuted_mode_diffuses_plaintext_flip():
    key = RNG.getrandbits(128)
    pt = RNG.getrandbits(128)
    a, _ = EncryptionSession(key, GIFT128, "dxor").encrypt(pt)
    b, _ = EncryptionSession(key, GIFT128, "dxor").encrypt(pt ^ 1)
    assert bin(a ^ b).count("1") > 32


def test_trace_bookkeeping():
    key = RNG.getrandbits(128)
    pt = RNG.getrandbits(128)
    session = EncryptionSession(key, GIFT128, "sxor")
    ct, traces = session.encrypt(pt, trace=True)
    assert len(traces) == 40
    # post-wiring state of round r is the pre-read state of round r+1
    for prev, nxt in zip(traces, traces[1:]):
        reconstructed = 0
        for j, nib in enumerate(nxt.input_nibbles):
            reconstructed |= nib << (4 * j)
        assert prev.post_state == reconstructed
    assert traces[-1].post_state == ct
    assert session.output_register.bits == ct
    assert all(len(t.column_reads) == 4 * 32 for t in traces)


def test_traced_and_fast_paths_agree_under_noise():
    params = DeviceParams(sigma_c2c=0.06, sigma_d2d=0.03, seed=123)
    key = RNG.getrandbits(128)
    pt = RNG.getrandbits(128)
    fast, _ = EncryptionSession(key, GIFT128, "dxor", params).encrypt(pt)
    traced, _ = EncryptionSession(key, GIFT128, "dxor", params).encrypt(pt, trace=True)
    assert fast == traced


def test_hardware_reuse_invariants():
    key = RNG.getrandbits(128)
    session = EncryptionSession(key, GIFT128, "dxor")
    writes_before = session.write_log.get("cell_write")
    fp_before = session.cell_fingerprint()
    for _ in range(3):
        pt = RNG.getrandbits(128)
        session.encrypt(pt)
        # single-read-per-round: one read cycle per round, no new writes
        assert session.current_log.rounds == 40
        assert session.current_log.get("cell_write") == 0
        assert session.write_log.get("cell_write") == writes_before
        assert session.cell_fingerprint() == fp_before
    assert session.reads_executed == 3 * 40


def test_event_counts_per_block():
    session = EncryptionSession(0, GIFT128, "dxor")
    session.encrypt(0)
    log = session.current_log
    assert log.get("decoder_cycle") == 40 * 32
    assert log.get("selector_cycle") == 40
    assert log.get("register_cycle") == 40
    assert log.get("dxor_sense") == 40 * 71  # 25 slices x 2 + 7 slices x 3
    assert log.get("ro_d_sense") == 40 * 57  # 25 slices x 2 + 7 slices x 1
    sxor = EncryptionSession(0, GIFT128, "sxor")
    sxor.encrypt(0)
    assert sxor.current_log.get("sxor_sense") == 40 * 71
    assert sxor.current_log.get("ro_s_sense") == 40 * 57


def test_gift64_event_counts():
    session = EncryptionSession(0, GIFT64, "dxor")
    session.encrypt(0)
    log = session.current_log
    # 9 plain slices x 2 XOR cols + 7 RC slices x 3 = 39; read-outs = 64-39
    assert log.get("dxor_sense") == 28 * 39
    assert log.get("ro_d_sense") == 28 * 25


# ---------------------------------------------------------------------------
# Trace export


def test_trace_export_deterministic():
    params = DeviceParams(sigma_c2c=0.05, seed=9)
    key, pt = 0x1234, 0x5678
    blobs = []
    for _ in range(2):
        session = EncryptionSession(key, GIFT128, "sxor", params)
        ct, traces = session.encrypt(pt, trace=True)
        round_fp, analog_fp = io.StringIO(), io.StringIO()
        export_round_trace(session, traces, round_fp)
        export_analog_trace(traces, analog_fp)
        blobs.append((round_fp.getvalue(), analog_fp.getvalue()))
    assert blobs[0] == blobs[1]
    header = blobs[0][0].splitlines()[0]
    assert '"record": "session"' in header and '"scheme": "sxor"' in header
    assert len(blobs[0][1].splitlines()) == 40 * 32 * 4


# ---------------------------------------------------------------------------
# Monte-Carlo sweep


def test_sweep_zero_sigma_is_error_free():
    pts = run_sweep(GIFT128, "dxor", [0.0], blocks=2, seed=3)
    assert pts[0].bit_errors == 0 and pts[0].block_errors == 0


def test_sweep_monotone_and_deterministic():
    sigmas = [0.0, 0.05, 0.09, 0.12]
    a = run_sweep(GIFT128, "sxor", sigmas, blocks=3, seed=5)
    b = run_sweep(GIFT128, "sxor", sigmas, blocks=3, seed=5)
    assert a == b
    bers = [p.bit_error_rate for p in a]
    assert bers == sorted(bers)
    table = format_sweep_table(a)
    assert table.startswith("# sigma_c2c")
    assert len(table.splitlines()) == 1 + len(sigmas)
