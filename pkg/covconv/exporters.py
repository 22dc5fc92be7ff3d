import json
from pathlib import Path
from typing import Any

import numpy as np

from .config import config
from .tensors import TensorRank, multi_indices


class DataExporter:
    """Utilities for writing reports and tabulated results."""

    @staticmethod
    def save_json(data: Any, filename: str, pretty: bool = True) -> str:
        """Save data as JSON file."""
        filepath = config.export_dir / f"{filename}.json"
        with open(filepath, "w", encoding="utf-8") as f:
            if pretty:
                json.dump(data, f, indent=4, default=str, ensure_ascii=False)
            else:
                json.dump(data, f, default=str, ensure_ascii=False)
        return str(filepath)

    @staticmethod
    def save_points_csv(points, values, rank: TensorRank, filename, prefix: str = "out") -> str:
        """Write `coord1,coord2,<prefix>_<multi-index>...`, one row per point.

        A bare filename goes to the export directory; paths are used as given.
        """
        points = np.asarray(points, dtype=float)
        dim = points.shape[1]
        values = np.asarray(values, dtype=float).reshape(points.shape[0], -1)
        header = [f"coord{i + 1}" for i in range(dim)] + [f"{prefix}_{mi}" for mi in multi_indices(rank, dim)]
        filepath = Path(filename)
        if filepath.parent == Path("."):
            filepath = config.export_dir / filepath
        np.savetxt(filepath, np.hstack([points, values]), delimiter=",", header=",".join(header), comments="",
                   fmt="%.17g")
        return str(filepath)
