from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    app_name: str = "Evolving Stable Matching Simulator"
    log_level: str = "INFO"

    # Where `run` / `sweep` write their artifacts when no --out is given
    output_dir: str = "runs"

    # Best-of-window width: ceil(c_window * log2 n)
    default_c_window: float = 4.0

    # Sweep workers (joblib n_jobs)
    sweep_parallelism: int = 1

    # Longest run the HTTP API will execute synchronously
    api_max_t: int = 2_000_000
    # Largest sweep (summed max_t over all replications) the HTTP API will execute
    api_max_sweep_t: int = 20_000_000

    # Sampling cadence is ceil(n / sample_every_divisor)
    sample_every_divisor: int = 4

    # Warmup: quadratic factor * n^2 * ceil(log2 n) for Simple/Interleaved,
    # linear factor * n * ceil(log2 n) for OneSided
    warmup_quadratic_factor: int = 2
    warmup_linear_factor: int = 4

    # Automatically load .env file content into environment variable.
    model_config = SettingsConfigDict(env_file=".env", env_prefix="ESM_", extra="ignore")


settings = Settings()
