from pydantic import BaseModel

from .enums import Band, PathEnv

class LinkState(BaseModel):
    endpoint_a: str
    endpoint_b: str
    band: Band
    distance_km: float
    attenuation_db: float = 0.0
    capacity_bps: float = 0.0
    prop_latency_ms: float = 0.0
    carrier_ghz: float = 0.0
    env: PathEnv = PathEnv.URBAN
    path_loss_db: float = 0.0
