"""JSON serialization mixin for snapshots, interval reports and coverage maps."""

import gzip
import json
from pathlib import Path
from typing import Any, Dict

GZIP_MAGIC = b"\x1f\x8b"


class JsonSerializableMixin:
    """Mixin providing JSON serialization with optional gzip compression.

    Classes using this mixin must implement a `to_dict()` method that returns
    a dictionary representation of their state.
    """

    def to_dict(self) -> Dict[str, Any]:
        """Convert instance state to dictionary for JSON serialization.

        Raises:
            NotImplementedError: If not implemented by subclass
        """
        raise NotImplementedError(f"{self.__class__.__name__} must implement to_dict() method")

    def to_json(self, **kwargs) -> str:
        """Convert instance state to JSON.

        Args:
            **kwargs: Additional arguments for json.dumps (e.g., indent=2 for pretty print)
        """
        return json.dumps(self.to_dict(), **kwargs)

    def to_json_gzipped(self, **kwargs) -> bytes:
        """Gzip-compressed JSON with the header timestamp pinned to zero.

        Identical state therefore yields identical bytes.
        """
        return gzip.compress(self.to_json(**kwargs).encode("utf-8"), mtime=0)

    def write_json(self, path: Path | str, compress: bool = False, **kwargs) -> Path:
        """Write the JSON form (keys sorted) to a file, gzip bytes when compress is set."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        if compress:
            target.write_bytes(self.to_json_gzipped(sort_keys=True, **kwargs))
        else:
            target.write_text(self.to_json(sort_keys=True, **kwargs), encoding="utf-8")
        return target


def read_json_document(path: Path | str) -> Dict[str, Any]:
    """Read a JSON document written by `write_json`, transparently un-gzipping it."""
    raw = Path(path).read_bytes()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return json.loads(raw.decode("utf-8"))
