import json
import logging
import os
import time
from pathlib import Path

logger = logging.getLogger(__name__)


class ResourceLock:
    """Exclusive lock over a directory, held as a lock file inside it"""

    def __init__(self, resource_type, directory, timeout=6 * 3600):
        self.resource_type = resource_type
        self.directory = Path(directory)
        self.timeout = timeout
        self.path = self.directory / f".{resource_type}.lock"

    def acquire(self):
        """Try to acquire lock. Returns True if successful, False if already locked."""
        self.directory.mkdir(parents=True, exist_ok=True)
        self._drop_if_stale()

        lock_value = {
            "acquired_at": time.time(),
            "resource_type": self.resource_type,
            "resource_id": str(self.directory),
            "pid": os.getpid(),
        }
        # O_EXCL makes creation atomic: only one holder can create the file
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            return False
        with os.fdopen(fd, "w") as handle:
            json.dump(lock_value, handle)
        return True

    def release(self):
        """Release the lock."""
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass

    def is_locked(self):
        """Check if resource is currently locked"""
        return self.path.exists()

    def get_lock_info(self):
        """Get information about current lock (for debugging)"""
        try:
            return json.loads(self.path.read_text())
        except (FileNotFoundError, json.JSONDecodeError):
            return None

    def _drop_if_stale(self):
        info = self.get_lock_info()
        if not info:
            return
        acquired_at = info.get("acquired_at")
        if isinstance(acquired_at, (int, float)) and time.time() - acquired_at > self.timeout:
            logger.warning(f"Dropping stale {self.resource_type} lock on {self.directory}")
            self.release()

    def __enter__(self):
        """Context manager support"""
        if not self.acquire():
            lock_info = self.get_lock_info()
            if lock_info:
                acquired_at = lock_info.get("acquired_at", "unknown")
                age = time.time() - acquired_at if isinstance(acquired_at, (int, float)) else "unknown"
                logger.warning(
                    f"{self.resource_type} {self.directory} locked for {age}s"
                )
            raise ResourceLockedException(
                f"{self.resource_type} {self.directory} is already being written by another run"
            )
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Automatically release lock when exiting context"""
        self.release()
        return False


class ResourceLockedException(Exception):
    """Raised when trying to acquire an already locked resource"""
