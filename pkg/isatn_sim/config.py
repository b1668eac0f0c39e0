import os
from pydantic import BaseSettings
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    sim_threads: int = int(os.getenv("ISATN_SIM_THREADS", "0"))
    log_level: str = os.getenv("ISATN_LOG_LEVEL", "INFO")
    default_out_dir: str = os.getenv("ISATN_OUT_DIR", "out")
    policy_file: str = os.getenv("ISATN_POLICY_FILE", "policy.json")
    beam_width: int = int(os.getenv("ISATN_BEAM_WIDTH", "8"))

    # The twin plans on a coarser grid than the engine ticks
    planning_epoch_minutes: int = int(os.getenv("ISATN_PLANNING_EPOCH_MINUTES", "60"))

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        if self.sim_threads < 0:
            self.sim_threads = 0

    def worker_count(self) -> int:
        """Worker processes used by `compare`; 0 means one per CPU."""
        if self.sim_threads > 0:
            return self.sim_threads
        return os.cpu_count() or 1

    class Config:
        env_file = ".env"

settings = Settings()
