from .config import Settings, get_settings, parse_cli_args, settings
from .errors import NvqError
from .logging import setup_logging

__all__ = ["settings", "Settings", "get_settings", "parse_cli_args", "NvqError", "setup_logging"]
