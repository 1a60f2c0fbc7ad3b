import json
import time

import pytest

from utils.locks import ResourceLock, ResourceLockedException

# =========================================================
# 1. acquire / release
# =========================================================

class TestAcquireRelease:

    def test_acquire_returns_true_when_free(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path / "run_1")
        assert lock.acquire() is True
        lock.release()

    def test_acquire_returns_false_when_already_locked(self, tmp_path):
        lock1 = ResourceLock("experiment", tmp_path / "run_2")
        lock2 = ResourceLock("experiment", tmp_path / "run_2")
        lock1.acquire()
        assert lock2.acquire() is False
        lock1.release()

    def test_release_allows_reacquire(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path / "run_3")
        lock.acquire()
        lock.release()
        assert lock.acquire() is True
        lock.release()

    def test_different_directories_are_independent(self, tmp_path):
        lock_a = ResourceLock("experiment", tmp_path / "a")
        lock_b = ResourceLock("experiment", tmp_path / "b")
        lock_a.acquire()
        assert lock_b.acquire() is True
        lock_a.release()
        lock_b.release()

    def test_different_resource_types_are_independent(self, tmp_path):
        lock1 = ResourceLock("experiment", tmp_path)
        lock2 = ResourceLock("export", tmp_path)   # same directory, different type
        lock1.acquire()
        assert lock2.acquire() is True
        lock1.release()
        lock2.release()

    def test_stale_lock_is_dropped(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path, timeout=10)
        lock.path.write_text(json.dumps({"acquired_at": time.time() - 60}))
        assert lock.acquire() is True
        lock.release()


# =========================================================
# 2. is_locked / get_lock_info
# =========================================================

class TestLockState:

    def test_false_when_not_acquired(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path)
        assert lock.is_locked() is False

    def test_true_after_acquire(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path)
        lock.acquire()
        assert lock.is_locked() is True
        lock.release()

    def test_info_has_fields_when_locked(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path)
        lock.acquire()
        info = lock.get_lock_info()
        assert info["resource_type"] == "experiment"
        assert info["resource_id"] == str(tmp_path)
        assert "acquired_at" in info
        lock.release()

    def test_info_none_after_release(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path)
        lock.acquire()
        lock.release()
        assert lock.get_lock_info() is None


# =========================================================
# 3. Context manager
# =========================================================

class TestContextManager:

    def test_releases_lock_on_normal_exit(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path)
        with lock:
            assert lock.is_locked() is True
        assert lock.is_locked() is False

    def test_releases_lock_on_exception(self, tmp_path):
        lock = ResourceLock("experiment", tmp_path)
        with pytest.raises(ValueError), lock:
            raise ValueError("something went wrong")
        assert lock.is_locked() is False

    def test_raises_when_already_locked(self, tmp_path):
        lock1 = ResourceLock("experiment", tmp_path)
        lock2 = ResourceLock("experiment", tmp_path)
        lock1.acquire()
        with pytest.raises(ResourceLockedException, match="experiment"), lock2:
            pass
        lock1.release()
