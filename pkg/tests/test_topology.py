import math

import numpy as np
import pytest

from isatn_sim.models.enums import LAYERS, ElementKind, Layer
from isatn_sim.services.topology_service import (
    EARTH_RADIUS_KM,
    ELEVATION_TOLERANCE_DEG,
    build_constellation,
    elevation_deg,
    ground_point_km,
    orbital_period_s,
    satellite_ground_track,
    satellite_position_km,
    visible_satellites,
)
from isatn_sim.utils.error_handlers import InvalidParameter

def test_leo_period():
    assert orbital_period_s(600) == pytest.approx(5792.4, abs=1.0)

def test_geostationary_period_is_about_a_sidereal_day():
    assert orbital_period_s(35786) == pytest.approx(86164.0, rel=1e-3)

def test_period_rejects_non_positive_altitude():
    with pytest.raises(InvalidParameter):
        orbital_period_s(0)

def test_default_constellation_spacing():
    sats = build_constellation(6, 12, 600, 53)
    assert len(sats) == 72
    assert len({s.id for s in sats}) == 72
    assert sorted({s.raan_deg for s in sats}) == pytest.approx([0, 30, 60, 90, 120, 150])
    assert sorted({s.phase_deg for s in sats}) == pytest.approx([30.0 * k for k in range(12)])

def test_single_satellite_sits_at_origin_angles():
    (sat,) = build_constellation(1, 1, 600, 53)
    assert (sat.raan_deg, sat.phase_deg) == (0.0, 0.0)

def test_second_plane_raan_under_half_circle_spread():
    sats = build_constellation(2, 3, 600, 53)
    assert len(sats) == 6
    assert {s.raan_deg for s in sats if s.plane_index == 1} == {90.0}

def test_build_constellation_rejects_empty_planes():
    with pytest.raises(InvalidParameter):
        build_constellation(0, 12, 600, 53)

def test_orbit_radius_is_constant():
    sat = build_constellation(1, 1, 600, 53)[0]
    for t in (0.0, 1234.5, 4000.0, 90000.0):
        assert np.linalg.norm(satellite_position_km(sat, t)) == pytest.approx(EARTH_RADIUS_KM + 600, rel=1e-12)

def test_ground_track_is_periodic():
    sat = build_constellation(6, 12, 600, 53)[17]
    period = orbital_period_s(600)
    start = satellite_ground_track(sat, 0.0)
    again = satellite_ground_track(sat, period)
    assert again == pytest.approx(start, abs=1e-6)

def test_opposite_slots_are_antipodal():
    sats = build_constellation(1, 2, 600, 53)
    for t in (0.0, 700.0, 3100.0):
        a = satellite_position_km(sats[0], t)
        b = satellite_position_km(sats[1], t)
        np.testing.assert_allclose(a + b, np.zeros(3), atol=1e-6)

def test_quarter_period_advances_a_right_angle():
    sat = build_constellation(1, 1, 600, 53)[0]
    quarter = orbital_period_s(600) / 4.0
    a = satellite_position_km(sat, 0.0)
    b = satellite_position_km(sat, quarter)
    cos = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    assert math.degrees(math.acos(np.clip(cos, -1, 1))) == pytest.approx(90.0, abs=1e-6)

def test_satellite_directly_overhead_is_at_ninety_degrees():
    ground = np.array([EARTH_RADIUS_KM, 0.0, 0.0])
    overhead = np.array([[EARTH_RADIUS_KM + 600.0, 0.0, 0.0]])
    assert elevation_deg(ground, overhead)[0, 0] == pytest.approx(90.0)

def test_planar_points_land_on_the_sphere(default_spec):
    p = ground_point_km((37.0, 151.0), default_spec.constellation)
    assert np.linalg.norm(p) == pytest.approx(EARTH_RADIUS_KM)

def test_visibility_shrinks_as_the_mask_rises(default_topology):
    zone = default_topology.zones[0]
    for t in (0.0, 1800.0, 7200.0):
        wide = visible_satellites(default_topology, zone, t, 0.0)
        nominal = visible_satellites(default_topology, zone, t, 10.0)
        steep = visible_satellites(default_topology, zone, t, 60.0)
        assert steep <= nominal <= wide

def test_best_satellite_is_visible_or_none(default_topology):
    zone = default_topology.zones[4]
    for t in np.arange(0.0, 6000.0, 600.0):
        best = default_topology.best_satellite(zone.id, t)
        if best is not None:
            assert best in default_topology.visible_satellites(zone.id, t)

def test_mask_outside_range_is_rejected(default_topology):
    zone = default_topology.zones[0]
    with pytest.raises(InvalidParameter):
        visible_satellites(default_topology, zone, 0.0, 91.0)
    with pytest.raises(InvalidParameter):
        visible_satellites(default_topology, zone, 0.0, -1.0)
    with pytest.raises(InvalidParameter):
        visible_satellites(default_topology, zone, 0.0, 90.0)

def test_element_table_layout(tiny_topology):
    top = tiny_topology
    assert top.n_sites == 6
    assert top.uav_offset == top.n_sites + 2
    assert top.satshare_offset == top.uav_offset + 2
    assert top.gateway_offset == top.satshare_offset + 2
    assert top.n_elements == top.gateway_offset + 2
    assert top.element_kind[0] == ElementKind.MACRO
    assert top.element_kind[top.uav_offset] == ElementKind.UAV
    assert top.element_kind[top.satshare_offset] == ElementKind.SATELLITE_SHARE
    assert top.element_layer[top.gateway_offset] == LAYERS.index(Layer.EDGE)
    assert list(top.edge_element) == [top.n_sites, top.n_sites + 1]

def test_gateway_and_pad_assignment(tiny_topology):
    assert list(tiny_topology.nearest_gateway) == [0, 1]
    assert [u.home_pad for u in tiny_topology.uavs] == ["pad-a", "pad-b"]
    # UAV energy counts against its home pad's region
    assert list(tiny_topology.element_static_region[tiny_topology.uav_offset:tiny_topology.satshare_offset]) == [0, 1]

def test_default_topology_counts(default_topology):
    assert default_topology.n_sats == 72
    assert len(default_topology.sites) == 180
    assert default_topology.n_uavs == 24
    assert default_topology.n_gateways == 8

def test_default_scenario_has_no_hourly_coverage_gaps(default_topology):
    mask = default_topology.anchor.min_elevation_deg - ELEVATION_TOLERANCE_DEG
    for hour in range(7 * 24):
        best = default_topology.zone_elevations(hour * 3600.0).max(axis=1)
        assert np.all(best >= mask), (hour, np.flatnonzero(best < mask))
