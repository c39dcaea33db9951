import os
import logging

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

def _format(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer, np.bool_)):
        return str(value.item())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format(v) for v in value) + "]"
    if isinstance(value, np.ndarray):
        return _format(value.tolist())
    return str(value)

def write_table(path, frame, metadata=None):
    """Write a whitespace separated table with a ``#`` metadata header.

    Args:
        path (str): Output file.
        frame (pandas.DataFrame): Columns to write, in order.
        metadata (dict): Resolved parameters and derived results, one
            ``# key = value`` line each.
    """
    directory = os.path.dirname(path)
    if directory and not os.path.isdir(directory):
        os.makedirs(directory)
    with open(path, "w", encoding="utf-8") as f:
        for key, value in (metadata or {}).items():
            f.write(f"# {key} = {_format(value)}\n")
        f.write("# columns: " + " ".join(str(c) for c in frame.columns) + "\n")
        frame.to_csv(f, sep=" ", header=False, index=False, float_format="%.12e")
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path

def read_table(path):
    """Read a table written by :func:`write_table` back into a DataFrame and its metadata."""
    metadata = {}
    columns = None
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("columns:"):
                columns = body[len("columns:"):].split()
            elif " = " in body:
                key, value = body.split(" = ", 1)
                metadata[key] = value
    frame = pd.read_csv(path, sep=" ", comment="#", header=None, names=columns)
    return frame, metadata
