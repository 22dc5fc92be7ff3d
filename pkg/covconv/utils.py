import argparse
import math

import numpy as np


def parse_vector(text: str) -> list[float]:
    """'1.5,0' -> [1.5, 0.0]; also accepts 'pi' and 'pi/2'-style entries."""
    try:
        return [_parse_number(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Cannot parse vector '{text}': {e}") from e


def parse_points(text: str) -> list[list[float]]:
    """'a,b;c,d' -> [[a, b], [c, d]]."""
    return [parse_vector(chunk) for chunk in text.split(";") if chunk.strip()]


def _parse_number(part: str) -> float:
    part = part.strip().lower()
    if "pi" in part:
        num, _, den = part.partition("/")
        scale = num.replace("pi", "").replace("*", "") or "1"
        value = math.pi * float("-1" if scale == "-" else scale)
        return value / float(den) if den else value
    return float(part)


def format_duration(seconds: float) -> str:
    if seconds < 1.0:
        return f"{seconds * 1000:.1f} ms"
    minutes, secs = divmod(seconds, 60)
    if minutes < 1:
        return f"{secs:.2f} s"
    return f"{int(minutes):d}:{secs:05.2f}"


def to_jsonable(obj):
    """numpy arrays and scalars -> plain lists and floats, recursively."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list | tuple):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
