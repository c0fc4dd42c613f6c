"""Run configuration: one hashable record of every knob a run depends on.

Configuration merges three layers, lowest precedence first: environment
variables, a JSON config file, then command-line flags.  Secrets (API
keys) never appear here; providers read them from the environment at call
time, so a config file or an output record can be shared safely.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .textutil import content_id

CHAT_KINDS = ("http", "mock")
SEARCH_KINDS = ("http", "mock")
EXTRACTION_KINDS = ("http", "mock")
JUDGE_KINDS = ("oracle", "chat", "mock-chat")
BATCH_MODES = ("per-query", "per-pair")

# Substrings that mark a config key as an attempted secret.
_SECRET_MARKERS = ("key", "token", "secret", "password")

# Environment variables that feed the configuration layer.  Provider API
# keys (MBC_CHAT_KEY and friends) are deliberately absent: they are read
# by the providers themselves and never enter the config record.
_ENV_PATHS = {
    "MBC_CACHE_DIR": ("cache_dir",),
    "MBC_WORKERS": ("workers",),
    "MBC_SEED": ("seed",),
    "MBC_CHAT_MODEL": ("chat", "model"),
    "MBC_CHAT_ENDPOINT": ("chat", "endpoint"),
    "MBC_SEARCH_ENDPOINT": ("search", "endpoint"),
    "MBC_QA_ENDPOINT": ("extraction", "endpoint"),
    "MBC_JUDGE_MODEL": ("judge", "model"),
}

_INT_FIELDS = {"workers", "seed", "result_depth", "per_query_cap", "votes"}
_FLOAT_FIELDS = {"threshold"}
_BOOL_FIELDS = {"retrieval"}


@dataclass(frozen=True)
class ProviderBinding:
    kind: str
    model: str = ""
    endpoint: str = ""

    def canonical(self) -> dict:
        return {"kind": self.kind, "model": self.model, "endpoint": self.endpoint}


@dataclass(frozen=True)
class RunConfig:
    chat: ProviderBinding = field(default_factory=lambda: ProviderBinding("http"))
    search: ProviderBinding = field(default_factory=lambda: ProviderBinding("http"))
    extraction: ProviderBinding = field(default_factory=lambda: ProviderBinding("http"))
    judge: ProviderBinding = field(default_factory=lambda: ProviderBinding("oracle"))
    retrieval: bool = True
    result_depth: int = 30
    threshold: float = 0.5
    per_query_cap: int = 8
    batch_mode: str = "per-query"
    votes: int = 4
    cache_dir: str = ".mbc-cache"
    workers: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        checks = (
            (self.chat.kind in CHAT_KINDS, f"chat.kind must be one of {CHAT_KINDS}"),
            (self.search.kind in SEARCH_KINDS, f"search.kind must be one of {SEARCH_KINDS}"),
            (
                self.extraction.kind in EXTRACTION_KINDS,
                f"extraction.kind must be one of {EXTRACTION_KINDS}",
            ),
            (self.judge.kind in JUDGE_KINDS, f"judge.kind must be one of {JUDGE_KINDS}"),
            (self.result_depth >= 1, "result_depth must be >= 1"),
            (0.0 <= self.threshold <= 1.0, "threshold must be within [0, 1]"),
            (self.per_query_cap >= 1, "per_query_cap must be >= 1"),
            (self.batch_mode in BATCH_MODES, f"batch_mode must be one of {BATCH_MODES}"),
            (self.votes >= 1, "votes must be >= 1"),
            (bool(self.cache_dir), "cache_dir must be set"),
            (self.workers >= 1, "workers must be >= 1"),
        )
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)

    def canonical(self) -> dict:
        return {
            "chat": self.chat.canonical(),
            "search": self.search.canonical(),
            "extraction": self.extraction.canonical(),
            "judge": self.judge.canonical(),
            "retrieval": self.retrieval,
            "result_depth": self.result_depth,
            "threshold": self.threshold,
            "per_query_cap": self.per_query_cap,
            "batch_mode": self.batch_mode,
            "votes": self.votes,
            "cache_dir": self.cache_dir,
            "workers": self.workers,
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        return content_id(self.canonical())


_DEFAULT_TREE = RunConfig().canonical()


def _check_no_secrets(tree: dict, prefix: str = "") -> None:
    for key, value in tree.items():
        path = f"{prefix}{key}"
        if any(marker in key.lower() for marker in _SECRET_MARKERS):
            raise ConfigurationError(
                f"config key {path!r} looks like a secret; secrets are read only "
                "from the environment (MBC_CHAT_KEY, MBC_SEARCH_KEY, MBC_QA_KEY)"
            )
        if isinstance(value, dict):
            _check_no_secrets(value, prefix=f"{path}.")


def _check_known_keys(tree: dict) -> None:
    for key, value in tree.items():
        if key not in _DEFAULT_TREE:
            raise ConfigurationError(f"unknown config key: {key!r}")
        if isinstance(_DEFAULT_TREE[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {key!r} must be an object")
            for sub in value:
                if sub not in _DEFAULT_TREE[key]:
                    raise ConfigurationError(f"unknown config key: '{key}.{sub}'")


def _coerce(path: tuple[str, ...], raw: str):
    leaf = path[-1]
    try:
        if leaf in _INT_FIELDS:
            return int(raw)
        if leaf in _FLOAT_FIELDS:
            return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{'.'.join(path)}: not a number: {raw!r}") from exc
    if leaf in _BOOL_FIELDS:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{'.'.join(path)}: not a boolean: {raw!r}")
    return raw


def _set_path(tree: dict, path: tuple[str, ...], value) -> None:
    node = tree
    for step in path[:-1]:
        node = node.setdefault(step, {})
    node[path[-1]] = value


def load_config(
    path: str | Path | None = None,
    *,
    env: dict | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Merge defaults, environment, config file, and flag overrides.

    `overrides` maps dotted paths ("judge.kind", "result_depth") to values
    and wins over everything; None values are ignored so absent flags fall
    through.
    """
    tree = json.loads(json.dumps(_DEFAULT_TREE))

    env = os.environ if env is None else env
    for name, target in _ENV_PATHS.items():
        raw = env.get(name)
        if raw:
            _set_path(tree, target, _coerce(target, raw))

    if path is not None:
        path = Path(path)
        try:
            loaded = json.loads(path.read_text("utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigurationError("config file must hold a JSON object")
        _check_no_secrets(loaded)
        _check_known_keys(loaded)
        for key, value in loaded.items():
            if isinstance(value, dict):
                for sub, subvalue in value.items():
                    _set_path(tree, (key, sub), subvalue)
            else:
                tree[key] = value

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        _set_path(tree, tuple(dotted.split(".")), value)

    try:
        return RunConfig(
            chat=ProviderBinding(**tree["chat"]),
            search=ProviderBinding(**tree["search"]),
            extraction=ProviderBinding(**tree["extraction"]),
            judge=ProviderBinding(**tree["judge"]),
            retrieval=tree["retrieval"],
            result_depth=tree["result_depth"],
            threshold=tree["threshold"],
            per_query_cap=tree["per_query_cap"],
            batch_mode=tree["batch_mode"],
            votes=tree["votes"],
            cache_dir=tree["cache_dir"],
            workers=tree["workers"],
            seed=tree["seed"],
        )
    except TypeError as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc


def build_chat_provider(config: RunConfig, cache=None):
    """Chat provider per the config, wrapped in caching when a cache is given."""
    from .providers import CachingChatProvider, HttpChatProvider

    if config.chat.kind == "mock":
        from .testing import MockChatProvider

        chat = MockChatProvider()
    else:
        chat = HttpChatProvider(
            endpoint=config.chat.endpoint or None,
            model=config.chat.model or "default",
        )
    if cache is not None:
        chat = CachingChatProvider(chat, cache)
    return chat


def build_search_client(config: RunConfig, cache):
    from .retrieval import SearchClient

    if config.search.kind == "mock":
        from .testing import FixtureSearchProvider

        provider = FixtureSearchProvider({})
        fetcher = None
    else:
        from .providers import HttpFetcher, HttpSearchProvider

        provider = HttpSearchProvider(endpoint=config.search.endpoint or None)
        fetcher = HttpFetcher()
    return SearchClient(provider, cache, fetcher=fetcher)


def build_extract_client(config: RunConfig, cache):
    from .extraction import ExtractClient

    if config.extraction.kind == "mock":
        from .testing import DEFAULT_EXTRACTION_RULES, RuleBasedExtractor

        provider = RuleBasedExtractor(DEFAULT_EXTRACTION_RULES)
    else:
        from .providers import HttpExtractor

        provider = HttpExtractor(endpoint=config.extraction.endpoint or None)
    return ExtractClient(
        provider, cache, threshold=config.threshold, per_query_cap=config.per_query_cap
    )


def build_judge(config: RunConfig, cache=None):
    from .evaluation import ChatJudge, OracleJudge

    if config.judge.kind == "oracle":
        return OracleJudge()
    if config.judge.kind == "mock-chat":
        from .testing import MockChatProvider

        return ChatJudge(MockChatProvider(), votes=config.votes)
    from .providers import CachingChatProvider, HttpChatProvider

    chat = HttpChatProvider(
        endpoint=config.judge.endpoint or None,
        model=config.judge.model or "default",
    )
    if cache is not None:
        chat = CachingChatProvider(chat, cache)
    return ChatJudge(chat, votes=config.votes)
