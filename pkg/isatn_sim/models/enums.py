from enum import Enum

class ZoneClass(str, Enum):
    URBAN = "urban"
    SUBURBAN = "suburban"
    RURAL = "rural"

class RegionKind(str, Enum):
    COASTAL = "coastal"
    INLAND = "inland"

class TrafficClass(str, Enum):
    EMBB = "eMBB"
    URLLC = "URLLC"
    MIOT = "mIoT"

# Row order used by every per-class array
TRAFFIC_CLASSES = [TrafficClass.EMBB, TrafficClass.URLLC, TrafficClass.MIOT]

class Band(str, Enum):
    SUB6 = "sub6"
    MMWAVE = "mmWave"
    KA = "Ka"
    MICROWAVE_BACKHAUL = "microwave_backhaul"
    ISL = "ISL"
    FIBER = "fiber"

class BackhaulKind(str, Enum):
    FIBER = "fiber"
    MICROWAVE = "microwave_backhaul"
    SATELLITE = "satellite"

class PathEnv(str, Enum):
    URBAN = "urban"
    SUBURBAN = "suburban"
    RURAL = "rural"
    AIR_GROUND = "air_ground"
    SPACE_GROUND = "space_ground"
    FIXED_LOS = "fixed_los"

class ElementKind(str, Enum):
    MACRO = "macro"
    SMALL = "small"
    EDGE_SERVER = "edge_server"
    UAV = "uav"
    SATELLITE_SHARE = "satellite_share"
    GATEWAY = "gateway"

class Layer(str, Enum):
    RAN = "ran"
    SATELLITE = "satellite"
    UAV = "uav"
    EDGE = "edge"

LAYERS = [Layer.RAN, Layer.SATELLITE, Layer.UAV, Layer.EDGE]

class SleepMode(str, Enum):
    ACTIVE = "active"
    MICRO_SLEEP = "micro_sleep"
    DEEP_SLEEP = "deep_sleep"
    OFF = "off"

class UavMode(str, Enum):
    GROUNDED = "grounded"
    CRUISE = "cruise"
    HOVER = "hover"
    STANDBY = "standby"

# Integer codes stored in per-element mode arrays
MODE_CODES = {
    SleepMode.ACTIVE: 0,
    SleepMode.MICRO_SLEEP: 1,
    SleepMode.DEEP_SLEEP: 2,
    SleepMode.OFF: 3,
    UavMode.CRUISE: 4,
    UavMode.HOVER: 5,
    UavMode.STANDBY: 6,
    UavMode.GROUNDED: 7,
}
MODES_BY_CODE = {code: mode for mode, code in MODE_CODES.items()}

class ActionKind(str, Enum):
    NO_OP = "no_op"
    REROUTE_ZONE_TO_GATEWAY = "reroute_zone_to_gateway"
    ACTIVATE_UAV = "activate_uav"
    DEACTIVATE_UAV = "deactivate_uav"
    WAKE_SMALL_CELLS = "wake_small_cells"
    SLEEP_SMALL_CELLS = "sleep_small_cells"
    SHIFT_EDGE_SERVICE = "shift_edge_service"
    STEER_BEAM_TO_SATELLITE = "steer_beam_to_satellite"

# no_op first: sampling ties resolve toward it
ACTION_KINDS = list(ActionKind)

class PolicyKind(str, Enum):
    STATIC = "static"
    QOS = "qos"
    ENERGY = "energy"
    MPC_RL = "mpc_rl"
