from pathlib import Path

from app.core.config import settings
from app.core.exceptions import ConfigError


def ensure_directory(path: str | Path) -> Path:
    """Create ``path`` (and parents) if needed; any OS failure becomes a ConfigError."""
    output_folder = Path(path)
    try:
        output_folder.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Cannot create output directory {output_folder}: {e}") from e
    return output_folder


def create_directory(directory_name: str, base_dir: str | Path | None = None) -> Path:
    """Create (if needed) ``<base_dir>/<directory_name>`` and return it."""
    base = Path(base_dir) if base_dir is not None else Path(settings.output_dir)
    return ensure_directory(base / directory_name)
