import json
import threading

import pytest

from mbcheck.cache import ResponseCache, TokenBucket, call_with_retries
from mbcheck.errors import ProviderError, ValidationError
from mbcheck.testing import FakeClock


class TestResponseCache:
    def test_miss_returns_none(self, tmp_path):
        cache = ResponseCache(tmp_path)
        assert cache.get("search", {"q": "x"}) is None

    def test_put_then_get_round_trips(self, tmp_path):
        cache = ResponseCache(tmp_path)
        value = {"results": [{"url": "https://a.example", "title": "t"}]}
        cache.put("search", {"q": "x", "page": 1}, value)
        assert cache.get("search", {"q": "x", "page": 1}) == value

    def test_key_order_does_not_matter(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cache.put("search", {"a": 1, "b": 2}, {"v": 1})
        assert cache.get("search", {"b": 2, "a": 1}) == {"v": 1}

    def test_namespaces_isolated(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cache.put("search", {"q": "x"}, {"v": "search"})
        assert cache.get("qa", {"q": "x"}) is None

    def test_file_layout_and_content(self, tmp_path):
        cache = ResponseCache(tmp_path)
        path = cache.put("search", {"q": "x"}, {"v": 1})
        assert path.parent == tmp_path / "search"
        assert path.suffix == ".json"
        assert len(path.stem) == 64
        # The file holds the canonical JSON of the value, nothing else.
        assert path.read_text("utf-8") == '{"v":1}'
        assert json.loads(path.read_text("utf-8")) == {"v": 1}

    def test_overwrite_same_key(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cache.put("chat", {"q": 1}, {"v": "old"})
        cache.put("chat", {"q": 1}, {"v": "new"})
        assert cache.get("chat", {"q": 1}) == {"v": "new"}

    def test_no_temp_files_left_behind(self, tmp_path):
        cache = ResponseCache(tmp_path)
        for i in range(5):
            cache.put("search", {"i": i}, {"v": i})
        leftovers = [p for p in (tmp_path / "search").iterdir() if p.suffix != ".json"]
        assert leftovers == []

    def test_concurrent_writers_single_key(self, tmp_path):
        cache = ResponseCache(tmp_path)
        errors = []

        def write(n):
            try:
                for _ in range(20):
                    cache.put("search", {"q": "same"}, {"v": n})
            except Exception as exc:  # pragma: no cover - failure path
                errors.append(exc)

        threads = [threading.Thread(target=write, args=(n,)) for n in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        assert cache.get("search", {"q": "same"}) in [{"v": n} for n in range(4)]


class TestTokenBucket:
    def test_burst_up_to_capacity_without_sleeping(self):
        fake = FakeClock()
        bucket = TokenBucket(rate=2.0, capacity=3.0, clock=fake.clock, sleep=fake.sleep)
        for _ in range(3):
            bucket.acquire()
        assert fake.sleeps == []

    def test_blocks_until_refill(self):
        fake = FakeClock()
        bucket = TokenBucket(rate=2.0, capacity=1.0, clock=fake.clock, sleep=fake.sleep)
        bucket.acquire()
        bucket.acquire()
        # Second acquire had to wait for one token at 2/s.
        assert fake.sleeps == [pytest.approx(0.5)]

    def test_refill_caps_at_capacity(self):
        fake = FakeClock()
        bucket = TokenBucket(rate=10.0, capacity=2.0, clock=fake.clock, sleep=fake.sleep)
        fake.now += 100.0
        bucket.acquire(2.0)
        assert fake.sleeps == []
        bucket.acquire()
        assert len(fake.sleeps) == 1

    def test_rejects_impossible_request(self):
        bucket = TokenBucket(rate=1.0, capacity=1.0)
        with pytest.raises(ValueError):
            bucket.acquire(2.0)

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            TokenBucket(rate=0.0)


class TestCallWithRetries:
    def test_success_first_try(self):
        assert call_with_retries(lambda: 42) == 42

    def test_retries_then_succeeds(self):
        fake = FakeClock()
        attempts = []

        def flaky():
            attempts.append(1)
            if len(attempts) < 3:
                raise ProviderError("boom")
            return "ok"

        assert call_with_retries(flaky, attempts=3, sleep=fake.sleep) == "ok"
        assert len(attempts) == 3
        assert len(fake.sleeps) == 2

    def test_exhausted_reraises_last_error(self):
        fake = FakeClock()

        def always_fails():
            raise ProviderError("persistent")

        with pytest.raises(ProviderError, match="persistent"):
            call_with_retries(always_fails, attempts=3, sleep=fake.sleep)
        assert len(fake.sleeps) == 2

    def test_backoff_grows_exponentially_with_jitter(self):
        import random

        fake = FakeClock()

        def always_fails():
            raise ProviderError("x")

        with pytest.raises(ProviderError):
            call_with_retries(
                always_fails,
                attempts=4,
                base_delay=1.0,
                sleep=fake.sleep,
                rng=random.Random(0),
            )
        # Jitter scales each base delay (1s, 2s, 4s) by [0.5, 1.5).
        assert len(fake.sleeps) == 3
        for delay, base in zip(fake.sleeps, [1.0, 2.0, 4.0]):
            assert 0.5 * base <= delay < 1.5 * base

    def test_non_retryable_errors_propagate_immediately(self):
        calls = []

        def fails():
            calls.append(1)
            raise ValidationError("not transport")

        with pytest.raises(ValidationError):
            call_with_retries(fails, attempts=3)
        assert len(calls) == 1
