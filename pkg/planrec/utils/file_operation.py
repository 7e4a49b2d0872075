"""File operation utilities for JSON documents and line-delimited transcripts."""

import json
import os
from typing import Any, Dict, Iterator, List, Tuple

from planrec.errors import ParseError, TranscriptError
from planrec.utils.data_utils import convert_numpy_types


def load_json_document(file_path: str, base_dir: str = ".") -> Any:
    """Load a whole JSON document; a file that does not parse raises ParseError."""
    full_path = os.path.join(base_dir, file_path)
    with open(full_path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{file_path}: not valid JSON ({exc})")


def dump_json_text(data: Any) -> str:
    """Serialise with numpy conversion; key order is preserved for stable output."""
    return json.dumps(convert_numpy_types(data), indent=2, ensure_ascii=False) + "\n"


def save_json_data(data: Any, file_path: str, base_dir: str = ".") -> None:
    """Save data to JSON file with proper encoding and numpy type conversion."""
    full_path = os.path.join(base_dir, file_path)
    parent = os.path.dirname(full_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(full_path, "w", encoding="utf-8") as f:
        f.write(dump_json_text(data))


def iter_json_lines(lines: List[str]) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """Yield ``(line number, record)`` for every non-blank line."""
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TranscriptError(f"malformed JSON ({exc.msg})", number)
        if not isinstance(record, dict):
            raise TranscriptError("record must be a JSON object", number)
        yield number, record


def read_lines(file_path: str) -> List[str]:
    with open(file_path, "r", encoding="utf-8") as f:
        return f.readlines()
