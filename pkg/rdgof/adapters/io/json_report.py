"""
I/O Adapter - JSON reports
Every command emits one JSON object. Floats are written in their shortest
round-trip form, keys keep insertion order, so identical runs give identical
bytes.
"""
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel

from rdgof.domain.errors import InputError


def _plain(value: Any) -> Any:
    """Convert numpy and pydantic values into JSON-native ones"""
    if isinstance(value, BaseModel):
        return _plain(value.model_dump())
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def dumps_report(payload: Dict[str, Any]) -> str:
    """Serialise a report; non-finite floats are written as Infinity / NaN"""
    return json.dumps(_plain(payload), indent=2, allow_nan=True) + "\n"


def write_report(payload: Dict[str, Any], output: Optional[str] = None) -> str:
    """Write a report to output (stdout when None or '-') and return the text"""
    text = dumps_report(payload)
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")
    return text


def load_report(path: str) -> Dict[str, Any]:
    """
    Load a report written by write_report

    Raises:
        InputError: If the file is missing or holds no JSON object
    """
    file = Path(path)
    if not file.is_file():
        raise InputError(f"Report file not found: {path}")
    try:
        report = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputError(f"Report is not valid JSON: {e.msg}", e.lineno)
    if not isinstance(report, dict) or "config" not in report:
        raise InputError("Report has no embedded 'config' object")
    return report
