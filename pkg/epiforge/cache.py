"""Cache per-node calibration fits locally for faster reruns."""
import hashlib
import os
from pathlib import Path
from typing import (
    Callable,
    Optional,
    Tuple,
    Union,
)

from sqlalchemy import (
    BLOB,
    Column,
    Integer,
    String,
    Text,
    create_engine,
)
from sqlalchemy.orm import (
    declarative_base,
    sessionmaker,
)
from sqlalchemy.orm.exc import NoResultFound
from sqlalchemy.schema import UniqueConstraint

Base = declarative_base()


def get_cache_path() -> Path:
    """Return the path to the user cache."""
    path = Path(os.getenv("EPIFORGE_CACHE", Path.home() / ".cache" / "epiforge"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def digest(*parts: Union[str, bytes]) -> str:
    """SHA-256 of the given parts, used as a cache key."""
    sha = hashlib.sha256()
    for part in parts:
        sha.update(part if isinstance(part, bytes) else part.encode("utf-8"))
        sha.update(b"\0")
    return sha.hexdigest()


class CacheEntry(Base):
    __tablename__ = "cache"
    __table_args__ = (UniqueConstraint("method", "key", name="unique_method_key"),)
    id = Column(Integer, primary_key=True, autoincrement=True)
    method = Column(String(255), nullable=False)
    key = Column(String(4096), nullable=False)
    text = Column(Text, nullable=True)
    blob = Column(BLOB, nullable=True)


class ResultCache:
    """SQLite store of fit results, keyed by method and input digest."""

    def __init__(self, path: Union[Path, str, None] = None):
        if path is None:
            path = get_cache_path() / "results.sqlite"
        engine = create_engine(f"sqlite:///{str(path)}")
        Base.metadata.create_all(engine)
        self.session = sessionmaker(bind=engine)()

    def close(self):
        self.session.close()

    @staticmethod
    def _key(key: Union[str, Tuple]) -> str:
        return "_".join(list(key)) if isinstance(key, tuple) else key

    def _entry(self, method: str, key: str) -> Optional[CacheEntry]:
        try:
            return (
                self.session.query(CacheEntry)
                .filter(CacheEntry.method == method, CacheEntry.key == key)
                .one()
            )
        except NoResultFound:
            return None

    def get(
        self, method: str, key: Union[str, Tuple], is_string=True
    ) -> Union[str, bytes, None]:
        """Retrieve an object from the cache, None when absent."""
        entry = self._entry(method, self._key(key))
        if entry is None:
            return None
        return entry.text if is_string else entry.blob

    def put(self, method: str, key: Union[str, Tuple], value: Union[str, bytes]):
        """Store an object, replacing any previous entry for the same key."""
        key = self._key(key)
        entry = self._entry(method, key) or CacheEntry(method=method, key=key)
        if isinstance(value, str):
            entry.text, entry.blob = value, None
        else:
            entry.text, entry.blob = None, value
        self.session.add(entry)
        self.session.commit()

    def get_or_add(
        self,
        method: str,
        key: Union[str, Tuple],
        callback: Callable[[], Union[str, bytes]],
        is_string=False,
    ) -> Union[str, bytes]:
        """Retrieve an object from the cache or produce it with the callback."""
        result = self.get(method, key, is_string)
        if result is None:
            result = callback()
            if is_string and isinstance(result, bytes):
                result = result.decode("utf-8")
            self.put(method, key, result)
        return result
