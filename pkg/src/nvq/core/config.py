from typing import Any, List, Optional

import configargparse
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Library and CLI settings with environment variable support."""

    # Logging
    log_level: str = "info"

    # Reproducibility
    seed: int = 0

    # Work distribution
    threads: int = 1
    chunk_size: int = 256

    # Fitting
    max_iters: int = 100
    tol: float = 1e-4

    # Kernels
    fast_math: bool = False

    model_config = SettingsConfigDict(env_prefix="NVQ_", env_file=".env", case_sensitive=False)


def get_settings() -> Settings:
    """Get settings from environment variables and .env file."""
    return Settings()


def add_settings_arguments(parser: configargparse.ArgParser, defaults: Optional[Settings] = None) -> None:
    """Register one flag per Settings field, each overridable by its NVQ_ environment variable."""
    defaults = defaults or get_settings()
    parser.add_argument(
        "--log-level",
        env_var="NVQ_LOG_LEVEL",
        default=defaults.log_level,
        choices=["debug", "info", "warning", "error"],
        help="Logging level",
    )
    parser.add_argument("--seed", env_var="NVQ_SEED", type=int, default=defaults.seed, help="Random seed")
    parser.add_argument("--threads", env_var="NVQ_THREADS", type=int, default=defaults.threads, help="Worker processes")
    parser.add_argument(
        "--chunk-size", env_var="NVQ_CHUNK_SIZE", type=int, default=defaults.chunk_size, help="Vectors per work unit"
    )
    parser.add_argument(
        "--max-iters", env_var="NVQ_MAX_ITERS", type=int, default=defaults.max_iters, help="Iteration cap per fit"
    )
    parser.add_argument("--tol", env_var="NVQ_TOL", type=float, default=defaults.tol, help="Stopping tolerance")
    parser.add_argument(
        "--fast-math",
        env_var="NVQ_FAST_MATH",
        action="store_true",
        default=defaults.fast_math,
        help="Use the single precision bit-trick kernels",
    )


def settings_from_args(args: Any) -> Settings:
    return Settings(
        log_level=args.log_level,
        seed=args.seed,
        threads=args.threads,
        chunk_size=args.chunk_size,
        max_iters=args.max_iters,
        tol=args.tol,
        fast_math=args.fast_math,
    )


def parse_cli_args(argv: Optional[List[str]] = None) -> Settings:
    """Parse the shared command line options into Settings."""
    parser = configargparse.ArgParser(default_config_files=[".env"], description="NVQ settings")
    parser.add_argument("--config", is_config_file=True, help="Config file path")
    add_settings_arguments(parser)

    # Only parse known args to avoid conflicts with command flags
    args, _ = parser.parse_known_args(argv)
    return settings_from_args(args)


# Global settings instance - use environment variables by default
settings = get_settings()
