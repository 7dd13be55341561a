"""Tests for JSON serialization mixin."""

import gzip
import json

import pytest

from rvloopfuzz.serialization import GZIP_MAGIC, JsonSerializableMixin, read_json_document


class Tally(JsonSerializableMixin):
    """Minimal serializable state."""

    def __init__(self, name: str, hits: int):
        self.name = name
        self.hits = hits

    def to_dict(self):
        return {"name": self.name, "hits": self.hits}


class TestJsonSerializableMixin:
    """Tests for JsonSerializableMixin class."""

    def test_to_dict_not_implemented(self):
        """to_dict must be provided by the subclass."""

        class Incomplete(JsonSerializableMixin):
            pass

        with pytest.raises(NotImplementedError, match="must implement to_dict"):
            Incomplete().to_dict()

    def test_to_json(self):
        """Plain JSON passes json.dumps options through."""
        assert Tally("lsu", 3).to_json() == '{"name": "lsu", "hits": 3}'
        assert "\n" in Tally("lsu", 3).to_json(indent=2)

    def test_gzipped_is_deterministic(self):
        """Compressed bytes depend only on the state."""
        first = Tally("fpu", 9).to_json_gzipped()
        second = Tally("fpu", 9).to_json_gzipped()
        assert first == second
        assert first[:2] == GZIP_MAGIC
        assert json.loads(gzip.decompress(first)) == {"name": "fpu", "hits": 9}

    def test_write_sorts_keys(self, tmp_path):
        """Written documents have sorted keys."""
        path = Tally("alu", 1).write_json(tmp_path / "t.json")
        assert path.read_text() == '{"hits": 1, "name": "alu"}'

    @pytest.mark.parametrize("compress", [False, True])
    def test_read_back(self, tmp_path, compress):
        """read_json_document reads plain and gzipped files alike."""
        path = Tally("csr", 4).write_json(tmp_path / "sub" / "t.json", compress=compress)
        assert read_json_document(path) == {"name": "csr", "hits": 4}
