import json
import logging
import os

import pandas as pd

from ..utils.error_handlers import IoError, ParseError

logger = logging.getLogger(__name__)

def load_json_file(path: str) -> dict:
    """Read a JSON document, mapping missing or malformed files to ParseError."""
    if not os.path.isfile(path):
        raise ParseError(f"File not found: {path}", field=path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"Malformed JSON in {path}", details=f"line {e.lineno} column {e.colno}: {e.msg}")
    except UnicodeDecodeError as e:
        raise ParseError(f"File is not UTF-8: {path}", details=str(e))

def write_text_file(path: str, text: str) -> str:
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise IoError(f"Cannot write {path}", details=str(e))
    logger.debug(f"Wrote {path}")
    return path

def load_csv_frame(path: str, required_columns: list[str]) -> pd.DataFrame:
    """Read a headered CSV, checking the required columns are present."""
    if not os.path.isfile(path):
        raise ParseError(f"File not found: {path}", field=path)
    try:
        frame = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"Malformed CSV in {path}", details=str(e))

    missing = [c for c in required_columns if c not in frame.columns]
    if missing:
        raise ParseError(f"Missing required columns in {path}: {missing}", field=",".join(missing))
    return frame

def write_csv_frame(path: str, frame: pd.DataFrame) -> str:
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    except OSError as e:
        raise IoError(f"Cannot write {path}", details=str(e))
    logger.debug(f"Wrote {path} ({len(frame)} rows)")
    return path
