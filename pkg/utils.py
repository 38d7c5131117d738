import json
import logging
import math
import multiprocessing as mp
import os
from argparse import ArgumentParser
from pathlib import Path
from typing import Callable, Iterable, List, Optional

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.8e"
LOG_FORMAT = "%(asctime)s %(levelname)s %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    """
    Sets up root logging once for the CLI process.

    Args:
        level: Level name; falls back to the RINGDEC_LOG environment variable, then INFO.
    """
    name = (level or os.environ.get("RINGDEC_LOG", "INFO")).upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
        logging.warning(f"Unknown RINGDEC_LOG level {name}, using INFO")
        return
    logging.basicConfig(level=numeric, format=LOG_FORMAT)


def add_run_arguments(parser: ArgumentParser) -> None:
    """
    Adds the flags shared by every subcommand.

    Args:
        parser: The (sub)parser the arguments are added to.
    """
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=None, help="Output directory")
    parser.add_argument("--workers", type=int, default=1, help="Worker processes for fan-out")
    parser.add_argument(
        "--log-override",
        action="store_true",
        default=None,
        help="Replace all logarithms of the saturation estimate by 1",
    )
    parser.add_argument(
        "--ir-mode", choices=["cutoff", "omega3"], default=None, help="Infrared handling"
    )
    parser.add_argument(
        "--boundary",
        choices=["dirichlet", "neumann"],
        default=None,
        help="Boundary condition at R_norm for the mode oracle",
    )


def parallel_map(func: Callable, items: Iterable, workers: int = 1) -> List:
    """
    Maps a picklable function over items, in worker processes when workers > 1.

    Results keep the order of items.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with mp.Pool(processes=min(workers, len(items))) as pool:
        return pool.map(func, items)


def round_significant(value: float, digits: int = 9) -> float:
    """
    Rounds a float to a fixed number of significant digits.

    Args:
        value: Number to round.
        digits: Significant digits kept.

    Returns:
        The rounded float.
    """
    return float(f"{value:.{digits - 1}e}")


def json_ready(payload):
    """Recursively converts numpy types, rounds floats to 9 significant digits and spells out infinities."""
    if isinstance(payload, dict):
        return {str(k): json_ready(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple, np.ndarray)):
        return [json_ready(v) for v in payload]
    if isinstance(payload, (bool, np.bool_)):
        return bool(payload)
    if isinstance(payload, (int, np.integer)):
        return int(payload)
    if isinstance(payload, (float, np.floating)):
        value = float(payload)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return round_significant(value)
    return payload


def write_json(payload: dict, path: Path) -> None:
    """
    Writes a payload as sorted, indented JSON, creating parent directories.

    Args:
        payload: Mapping passed through json_ready first.
        path: Destination file.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_ready(payload), indent=2, sort_keys=True) + "\n")
    logging.info(f"Wrote {path}")


def write_csv(frame: pd.DataFrame, path: Path) -> None:
    """
    Writes a frame without its index, floats in %.8e and NaN spelled "nan".

    Args:
        frame: Table to write.
        path: Destination file.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    logging.info(f"Wrote {path}")
