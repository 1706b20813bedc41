import logging
from typing import Optional

from app.core.config import settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once for CLI and API processes"""
    root = logging.getLogger()
    resolved = (level or settings.LOG_LEVEL).upper()
    if not any(getattr(h, "_maclab", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._maclab = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.setLevel(resolved)
