import logging
from pathlib import Path
from typing import Optional

import colorlog


FMT = "%(asctime)s %(levelname)s %(name)s - %(message)s"


def setup_logging(level: int = logging.INFO, log_dir: Optional[str] = None, filename: str = "latest.log") -> None:
    """Configure console (+ optional file) logging.

    Safe to call multiple times; avoids adding duplicate handlers.
    """
    root = logging.getLogger()
    root.setLevel(level)

    has_stream = any(isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler) for h in root.handlers)
    if not has_stream:
        sh = colorlog.StreamHandler()
        sh.setLevel(level)
        sh.setFormatter(colorlog.ColoredFormatter("%(log_color)s" + FMT))
        root.addHandler(sh)
    else:
        for h in root.handlers:
            h.setLevel(level)

    if log_dir is None:
        return
    try:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)
        has_file = any(isinstance(h, logging.FileHandler) for h in root.handlers)
        if not has_file:
            fh = logging.FileHandler(log_path / filename, encoding="utf-8")
            fh.setLevel(level)
            fh.setFormatter(logging.Formatter(FMT))
            root.addHandler(fh)
    except OSError:
        # Unwritable directory: console only
        pass
