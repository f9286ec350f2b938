from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable, Tuple

import pandas as pd


def _fmt(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    if value is None:
        return ""
    return str(value)


def write_csv(frame: pd.DataFrame, path: Path, header: Iterable[Tuple[str, Any]] = ()) -> Path:
    """Write `frame` with `# key=value` comment lines echoing the run configuration.

    Read back with ``pd.read_csv(path, comment="#")``.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key, value in header:
            f.write(f"# {key}={_fmt(value)}\n")
        frame.to_csv(f, index=False, lineterminator="\n", float_format="%.17g")
    return path
