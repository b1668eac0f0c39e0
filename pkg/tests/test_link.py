import math

import numpy as np
import pytest

from isatn_sim.models.enums import Band, PathEnv
from isatn_sim.models.link import LinkState
from isatn_sim.services.link_service import (
    SPEED_OF_LIGHT_KM_PER_MS,
    flow_latency_ms,
    isl_link,
    link_capacity_bps,
    make_link,
    path_loss_db,
    queueing_delay_ms,
    spectral_efficiency,
)
from isatn_sim.utils.error_handlers import InvalidParameter

def _link(path_loss=100.0, attenuation=0.0) -> LinkState:
    return LinkState(endpoint_a="a", endpoint_b="b", band=Band.KA, distance_km=1.0, path_loss_db=path_loss,
                     attenuation_db=attenuation, prop_latency_ms=0.01)

def test_free_space_loss_at_one_kilometre():
    assert path_loss_db(1.0, 2.0, PathEnv.FIXED_LOS) == pytest.approx(98.4606, abs=1e-3)

def test_tenfold_distance_adds_twenty_db_at_exponent_two():
    near = path_loss_db(1.0, 2.0, PathEnv.SPACE_GROUND)
    far = path_loss_db(10.0, 2.0, PathEnv.SPACE_GROUND)
    assert far - near == pytest.approx(20.0, abs=1e-9)

def test_path_loss_is_vectorised():
    losses = path_loss_db(np.array([1.0, 2.0, 4.0]), 3.5, PathEnv.URBAN)
    assert losses.shape == (3,)
    assert np.all(np.diff(losses) > 0)

def test_path_loss_rejects_zero_distance():
    with pytest.raises(InvalidParameter):
        path_loss_db(0.0, 2.0, PathEnv.URBAN)

def test_zero_db_snr_gives_one_bit_per_hertz():
    # 30 dBm - 100 dB - (-70 dBm) = 0 dB
    assert link_capacity_bps(_link(), 30.0, -70.0, 1e6) == pytest.approx(1e6)

def test_rain_fade_capacity_ratio():
    clear = link_capacity_bps(_link(), 40.0, -70.0, 1e6)
    faded = link_capacity_bps(_link(attenuation=15.0), 40.0, -70.0, 1e6)
    expected = math.log2(1 + 10 ** -0.5) / math.log2(11)
    assert faded / clear == pytest.approx(expected, rel=1e-9)
    assert faded / clear == pytest.approx(0.114, abs=1e-3)

def test_high_snr_hits_the_modulation_ceiling():
    assert link_capacity_bps(_link(), 90.0, -70.0, 1e6) == pytest.approx(7.8e6)

def test_deep_fade_decays_smoothly_to_zero():
    capacities = [link_capacity_bps(_link(attenuation=a), 30.0, -70.0, 1e6) for a in (10, 20, 40, 80)]
    assert all(a > b > 0 for a, b in zip(capacities, capacities[1:]))
    assert capacities[-1] < 0.1

def test_spectral_efficiency_is_monotone():
    se = spectral_efficiency(np.linspace(-20, 40, 61))
    assert np.all(np.diff(se) >= 0)

def test_made_links_respect_light_speed():
    link = make_link("zone", "sat", Band.KA, 900.0, 20.0, PathEnv.SPACE_GROUND)
    assert link.prop_latency_ms >= link.distance_km / 300.0
    assert link.prop_latency_ms == pytest.approx(900.0 / SPEED_OF_LIGHT_KM_PER_MS)

def test_isl_hop_keeps_its_fixed_latency():
    hop = isl_link("sat-1", "sat-2", 4.0, 10e9)
    assert hop.prop_latency_ms == 4.0
    assert hop.prop_latency_ms >= hop.distance_km / 300.0

def test_idle_flow_latency_is_pure_propagation():
    path = [_link(), make_link("a", "b", Band.FIBER, 60.0, 1.0, PathEnv.FIXED_LOS)]
    assert flow_latency_ms(path, 0.0, 1e8) == pytest.approx(sum(l.prop_latency_ms for l in path))

def test_half_loaded_queue():
    assert queueing_delay_ms(1e6, 50e6, 100e6) == pytest.approx(20.0)
    assert flow_latency_ms([], 50e6, 100e6, queue_bits=1e6) == pytest.approx(20.0)

def test_latency_rises_to_saturation():
    loads = np.linspace(0.0, 100e6, 101)
    latencies = [flow_latency_ms([_link()], load, 100e6) for load in loads]
    assert all(b >= a for a, b in zip(latencies, latencies[1:]))
    assert latencies[-1] == 250.0

def test_flow_latency_needs_capacity():
    with pytest.raises(InvalidParameter):
        flow_latency_ms([], 1.0, 0.0)
