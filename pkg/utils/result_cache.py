# utils/result_cache.py: on-disk memo of expensive sweep points
import hashlib
import json

from diskcache import Cache

from utils.exporters import VERSION
from utils.logging_setup import get_logger

logger = get_logger("cache")

CACHE_SCHEMA = 2   # bump when a cached result changes shape or meaning


def hash_point(payload: dict, version: str = VERSION) -> str:
    """sha256 of the canonical JSON of one point's inputs, salted with the code and schema version."""
    stamped = {"point": payload, "version": version, "schema": CACHE_SCHEMA}
    text = json.dumps(stamped, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ResultCache:
    def __init__(self, path: str = "data/result_cache", ttl_hours: float = 24 * 30, enabled: bool = True):
        self.path = path
        self.enabled = enabled
        self.ttl = int(ttl_hours * 3600)
        self._cache = None

    @property
    def cache(self) -> Cache:
        if self._cache is None:
            self._cache = Cache(self.path)
        return self._cache

    def get(self, key: str):
        if not self.enabled:
            return None
        value = self.cache.get(key)
        if value is not None:
            logger.debug(f"cache.hit key={key[:12]}")
        return value

    def set(self, key: str, value):
        if not self.enabled:
            return
        self.cache.set(key, value, expire=self.ttl)

    def close(self):
        if self._cache is not None:
            self._cache.close()
            self._cache = None
