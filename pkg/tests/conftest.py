import numpy as np
import pytest

from isatn_sim.models.enums import BackhaulKind, RegionKind, TrafficClass, ZoneClass
from isatn_sim.models.scenario import (
    CarbonSourceSpec,
    ConstellationSpec,
    EdgeServiceSpec,
    EmbbProfile,
    GatewaySiteSpec,
    GatewaySpec,
    MiotProfile,
    OrchestrationSpec,
    RanSpec,
    RegionProfile,
    RlSpec,
    ScenarioSpec,
    SwapPadSpec,
    TrafficProfiles,
    UavSpec,
    UrllcProfile,
    ZoneSpec,
)
from isatn_sim.models.simulation import TickInputs
from isatn_sim.models.twin import Forecast
from isatn_sim.services.candidate_service import static_config
from isatn_sim.services.engine_service import initial_state
from isatn_sim.services.environment_service import CarbonTrace
from isatn_sim.services.scenario_service import default_link_spec, default_power_catalog, default_scenario
from isatn_sim.services.topology_service import build_topology

COASTAL = RegionKind.COASTAL.value
INLAND = RegionKind.INLAND.value

def make_tiny_spec(**updates) -> ScenarioSpec:
    """Two regions, one fiber zone and one gateway each, two UAVs, 15-minute ticks."""
    spec = ScenarioSpec(
        days=1,
        epoch_minutes=15,
        seed=7,
        constellation=ConstellationSpec(planes=2, sats_per_plane=3, total_satellites=6),
        ran=RanSpec(macro_count=2, small_count=4, zones=[
            ZoneSpec(id="z-a", zone_class=ZoneClass.URBAN, region=COASTAL, centroid=(50.0, 100.0),
                     macro_sites=1, small_sites=2, backhaul=BackhaulKind.FIBER, industrial=True),
            ZoneSpec(id="z-b", zone_class=ZoneClass.SUBURBAN, region=INLAND, centroid=(150.0, 100.0),
                     macro_sites=1, small_sites=2, backhaul=BackhaulKind.FIBER),
        ]),
        uavs=UavSpec(count=2, swap_pads=[
            SwapPadSpec(id="pad-a", region=COASTAL, position=(50.0, 90.0)),
            SwapPadSpec(id="pad-b", region=INLAND, position=(150.0, 90.0)),
        ]),
        gateways=GatewaySpec(
            count=2,
            sites=[
                GatewaySiteSpec(id="gw-a", region=COASTAL, position=(40.0, 100.0)),
                GatewaySiteSpec(id="gw-b", region=INLAND, position=(160.0, 100.0)),
            ],
            services=[
                EdgeServiceSpec(id="urllc-compute", traffic_class=TrafficClass.URLLC, compute_demand=0.3),
                EdgeServiceSpec(id="embb-cache", traffic_class=TrafficClass.EMBB, compute_demand=0.5),
            ],
        ),
        traffic_profiles=TrafficProfiles(
            embb=EmbbProfile(peak_bps={ZoneClass.URBAN: 1e8, ZoneClass.SUBURBAN: 5e7, ZoneClass.RURAL: 1e7}),
            urllc=UrllcProfile(rate_bps=1e7),
            miot=MiotProfile(batches_per_hour={ZoneClass.URBAN: 6.0, ZoneClass.SUBURBAN: 6.0, ZoneClass.RURAL: 6.0},
                             batch_bits=2e8),
        ),
        carbon_source=CarbonSourceSpec(regions=[
            RegionProfile(id=COASTAL, kind=RegionKind.COASTAL, base_renewable=0.5, solar_amplitude=0.2,
                          evening_amplitude=0.0, noise=0.01),
            RegionProfile(id=INLAND, kind=RegionKind.INLAND, base_renewable=0.1, solar_amplitude=0.0,
                          evening_amplitude=0.0, noise=0.01),
        ]),
        power_catalog=default_power_catalog(),
        links=default_link_spec(),
        orchestration=OrchestrationSpec(
            beam_width=2,
            uav_levels=[0.0, 1.0],
            sleep_levels=[0.0, 0.6],
            gateway_choices=["region"],
            edge_choices=["region"],
            rl=RlSpec(episodes=2),
        ),
    )
    return spec.copy(update=updates) if updates else spec

class ConstantInputs:
    """Input source returning the same tick inputs at every t."""

    def __init__(self, demand_bits, intensity, renewable, rain_db=None):
        self.demand_bits = np.asarray(demand_bits, dtype=float)
        self.intensity = np.asarray(intensity, dtype=float)
        self.renewable = np.asarray(renewable, dtype=float)
        self.rain_db = rain_db or {}

    def inputs_at(self, t, minutes):
        return TickInputs(demand_bits=self.demand_bits, intensity=self.intensity, renewable=self.renewable,
                          rain_db=self.rain_db)

# Bits per hour, zone x class
HOURLY_DEMAND = np.array([
    [5e7 * 3600, 1e7 * 3600, 8e8],
    [2e7 * 3600, 0.0, 8e8],
])

def hourly_forecast(hours=12, start_hour=0, intensity=(100.0, 400.0), renewable=(0.8, 0.1), demand=HOURLY_DEMAND):
    """Flat forecast for the tiny scenario: coastal at 100 g/kWh, inland at 400 g/kWh."""
    return Forecast(
        start_hour=start_hour,
        horizon_hours=hours,
        zone_ids=["z-a", "z-b"],
        region_ids=[COASTAL, INLAND],
        traffic_bits=np.tile(demand, (hours, 1, 1)).tolist(),
        carbon_intensity=[list(intensity)] * hours,
        renewable_share=[list(renewable)] * hours,
    )

def root_state(topology, t=0):
    source = ConstantInputs(HOURLY_DEMAND / 4.0, [100.0, 400.0], [0.8, 0.1])
    return initial_state(topology, source, static_config(topology), t)

@pytest.fixture
def tiny_spec():
    return make_tiny_spec()

@pytest.fixture
def tiny_topology(tiny_spec):
    return build_topology(tiny_spec)

@pytest.fixture(scope="module")
def default_spec():
    return default_scenario()

@pytest.fixture(scope="module")
def default_topology(default_spec):
    return build_topology(default_spec)

@pytest.fixture
def flat_trace():
    """Two days, coastal always at 100 g/kWh and inland at 400 g/kWh."""
    hours = 48
    intensity = np.tile([100.0, 400.0], (hours, 1))
    renewable = np.tile([0.8, 0.1], (hours, 1))
    return CarbonTrace((COASTAL, INLAND), intensity, renewable)
