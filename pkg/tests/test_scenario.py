import json

import pytest

from isatn_sim.services.scenario_service import default_scenario, dump_scenario, load_scenario, validate
from isatn_sim.utils.error_handlers import ParseError, ValidationError

def test_default_scenario_matches_published_setup(default_spec):
    c = default_spec.constellation
    assert (c.planes, c.sats_per_plane, c.total_satellites, c.altitude_km) == (6, 12, 72, 600.0)
    assert (default_spec.ran.macro_count, default_spec.ran.small_count) == (60, 120)
    assert sum(z.macro_sites for z in default_spec.ran.zones) == 60
    assert sum(z.small_sites for z in default_spec.ran.zones) == 120
    u = default_spec.uavs
    assert (u.count, u.endurance_h, u.coverage_km, len(u.swap_pads)) == (24, 4.0, 15.0, 6)
    assert default_spec.gateways.count == 8
    assert default_spec.days == 7
    assert [(e.start_hour, e.end_hour) for e in default_spec.rain_events] == [(66, 70), (132, 136)]

def test_default_scenario_is_valid(default_spec):
    assert validate(default_spec) == []

def test_dump_then_load_round_trips(tmp_path, default_spec):
    path = dump_scenario(default_spec, str(tmp_path / "scenario.json"))
    assert load_scenario(path) == default_spec

def test_days_zero_gives_one_violation(tiny_spec):
    violations = validate(tiny_spec.copy(update={"days": 0}))
    assert len(violations) == 1
    assert violations[0].startswith("days")

def test_unmapped_zone_is_named(tiny_spec):
    zones = [tiny_spec.ran.zones[0].copy(update={"region": "nowhere"}), tiny_spec.ran.zones[1]]
    ran = tiny_spec.ran.copy(update={"zones": zones})
    violations = validate(tiny_spec.copy(update={"ran": ran}))
    assert len(violations) == 1
    assert "z-a" in violations[0]

def _write(tmp_path, spec, **overrides) -> str:
    raw = json.loads(spec.json())
    for dotted, value in overrides.items():
        node = raw
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node[key]
        node[leaf] = value
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)

def test_constellation_product_mismatch_is_rejected(tmp_path, default_spec):
    path = _write(tmp_path, default_spec, **{"constellation.sats_per_plane": 11})
    with pytest.raises(ValidationError) as excinfo:
        load_scenario(path)
    assert any(v.startswith("constellation.total_satellites") for v in excinfo.value.violations)

def test_epoch_not_dividing_an_hour_is_rejected(tmp_path, tiny_spec):
    path = _write(tmp_path, tiny_spec, epoch_minutes=7)
    with pytest.raises(ValidationError) as excinfo:
        load_scenario(path)
    assert excinfo.value.field == "epoch_minutes"

def test_unknown_keys_are_rejected(tmp_path, tiny_spec):
    path = _write(tmp_path, tiny_spec, colour="blue")
    with pytest.raises(ValidationError):
        load_scenario(path)

def test_malformed_json_is_a_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json", encoding="utf-8")
    with pytest.raises(ParseError):
        load_scenario(str(path))

def test_default_scenario_builds_fresh_objects():
    assert default_scenario() == default_scenario()
    assert default_scenario() is not default_scenario()
