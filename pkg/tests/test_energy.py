import pytest

from memgift.crossbar import ConfigError
from memgift.energy import (
    CMOS_GIFT_REFERENCE,
    AreaReport,
    EnergyParams,
    MissingEventsError,
    account,
    area_report,
    load_energy_config,
)
from memgift.gift import GIFT128
from memgift.pipeline import EncryptionSession, EventLog


def block_log(scheme):
    session = EncryptionSession(0, GIFT128, scheme)
    session.encrypt(0)
    return session


def test_dxor_defaults_reproduce_published_totals():
    session = block_log("dxor")
    report = account(session.session_log())
    assert report.total_energy_pj == pytest.approx(241.52, rel=5e-3)
    assert report.average_power_uw == pytest.approx(60.38, rel=5e-3)
    assert report.latency_us == pytest.approx(4.0)


def test_sxor_defaults_reproduce_published_totals():
    session = block_log("sxor")
    report = account(session.session_log())
    assert report.total_energy_pj == pytest.approx(1030.4, rel=5e-3)
    assert report.average_power_uw == pytest.approx(257.6, rel=5e-3)
    assert report.latency_us == pytest.approx(4.0)


def test_energy_power_latency_identity():
    for scheme in ("sxor", "dxor"):
        report = account(block_log(scheme).session_log())
        assert report.total_energy_pj == pytest.approx(
            report.average_power_uw * report.latency_us, rel=1e-12
        )


def test_breakdown_sums_to_total():
    report = account(block_log("dxor").session_log())
    total = sum(b["total_pj"] for b in report.breakdown.values())
    assert total == pytest.approx(report.total_energy_pj, rel=1e-12)
    for b in report.breakdown.values():
        assert b["total_pj"] == pytest.approx(b["dynamic_pj"] + b["static_pj"])


def test_sxor_sense_amps_dominate():
    report = account(block_log("sxor").session_log())
    sa = report.breakdown["sense_amps"]["total_pj"]
    assert sa / report.total_energy_pj > 0.5
    assert all(
        sa >= report.breakdown[c]["total_pj"] for c in report.breakdown
    )


def test_write_phase_reported_separately():
    session = block_log("dxor")
    report = account(session.session_log())
    assert report.write_events == 4888
    assert report.write_phase_pj == pytest.approx(4888 * 4.0)  # 4 pJ per write
    # block figures unchanged by the write phase
    no_writes = account(session.current_log)
    assert no_writes.total_energy_pj == pytest.approx(report.total_energy_pj)
    assert no_writes.write_phase_pj == 0.0


def test_doubling_clock_halves_latency_and_static_only():
    log = block_log("dxor").session_log()
    base = account(log)
    fast = account(log, EnergyParams(clock_hz=20e6))
    assert fast.latency_us == pytest.approx(base.latency_us / 2)
    for comp in base.breakdown:
        assert fast.breakdown[comp]["dynamic_pj"] == pytest.approx(
            base.breakdown[comp]["dynamic_pj"]
        )
        assert fast.breakdown[comp]["static_pj"] == pytest.approx(
            base.breakdown[comp]["static_pj"] / 2
        )


def test_missing_categories_rejected():
    log = EventLog("GIFT-128", "dxor", rounds=40)
    log.add("decoder_cycle", 40 * 32)
    with pytest.raises(MissingEventsError):
        account(log)
    with pytest.raises(MissingEventsError):
        account(EventLog("GIFT-128", "dxor", rounds=0))


def test_report_serialization():
    report = account(block_log("dxor").session_log())
    d = report.to_dict()
    assert d["cmos_reference"] == CMOS_GIFT_REFERENCE
    table = report.format_table()
    assert "241.52" in table and "60.38" in table
    assert "write phase" in table and "CMOS-GIFT" in table


# ---------------------------------------------------------------------------
# Area


def test_area_defaults():
    report = area_report(GIFT128)
    assert isinstance(report, AreaReport)
    assert report.total_mm2 == pytest.approx(0.0034)
    assert sum(report.breakdown.values()) == pytest.approx(report.total_mm2)


def test_area_equal_for_both_schemes():
    # the area table is scheme-independent by construction
    assert area_report(GIFT128).total_mm2 == area_report(GIFT128).total_mm2 == 0.0034


def test_zeroing_component_removes_exactly_its_share():
    params = EnergyParams()
    area = dict(params.area_mm2)
    share = area["register"]
    area["register"] = 0.0
    reduced = area_report(GIFT128, EnergyParams(area_mm2=area))
    assert reduced.total_mm2 == pytest.approx(0.0034 - share)


# ---------------------------------------------------------------------------
# Config file


def test_energy_config_overrides(tmp_path):
    cfg = tmp_path / "energy.cfg"
    cfg.write_text(
        """
clock_hz = 20e6
dxor_sense = 44e-15
static.crossbar = 1e-6
area.register = 0.0008
"""
    )
    params = load_energy_config(cfg)
    assert params.clock_hz == 20e6
    assert params.dxor_sense == 44e-15
    assert params.static_power["crossbar"] == 1e-6
    assert params.area_mm2["register"] == 0.0008
    # untouched entries keep their defaults
    assert params.static_power["decoders"] == 1.5e-6


def test_energy_config_rejects_unknown(tmp_path):
    cfg = tmp_path / "energy.cfg"
    cfg.write_text("warp_core = 9\n")
    with pytest.raises(ConfigError):
        load_energy_config(cfg)
    cfg.write_text("static.flux = 1\n")
    with pytest.raises(ConfigError):
        load_energy_config(cfg)


def test_energy_params_validation():
    with pytest.raises(ValueError):
        EnergyParams(dxor_sense=-1.0)
    with pytest.raises(ValueError):
        EnergyParams(static_power={"decoders": 1e-6})
