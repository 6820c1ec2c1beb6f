from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging (stderr only; stdout is reserved for one summary line per command)
    log_level: str = "INFO"
    log_format: str = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

    # Reproducibility
    default_seed: int = 0
    jobs: int = 1
    torch_threads: int = 1

    # Output
    output_dir: str = "runs"

    # Numerics
    grad_clip_norm: float | None = 5.0
    hmm_variance_floor_scale: float = 1e-3
    hmm_min_variance: float = 1e-6
    kmeans_max_frames: int = 20000

    # Scoring
    fa_mode: str = "event"
    threshold_count: int = 101

    model_config = {"env_prefix": "SEIZ_", "env_file": ".env", "extra": "ignore"}


settings = Settings()
