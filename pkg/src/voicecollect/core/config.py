"""Runtime-config grammar: parsing, classification, canonical emission.

The runtime config is the server-authored document that tells a phone what
to ask the user to record. Canonical wire form (field order is the order
emitted by serialize_runtime_config):

    {
      "config_number": int,
      "selector_string": str,
      "lists": [{"prompts": [{"text": str, "seconds": int|null}]}],
      "no_recording_text": str,
      "max_recording_time": int,
      "default_engine_number": int
    }

Classification is a partition: exactly one of guided / free_recording /
text_only holds for every parseable document. An empty body and an empty
"lists" array both mean free recording; a first pair of ("no_recording", 0)
switches the whole config to text-only input.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    BadConfigName,
    EmptyPromptText,
    MalformedDocument,
    NonPositiveSeconds,
    TooManyLists,
)

DEFAULT_MAX_RECORDING_TIME = 30
DEFAULT_NO_RECORDING_TEXT = "Recording de-activated, submit text only"

# First pair of the first list that switches a config to text-only input.
SENTINEL_TEXT = "no_recording"
SENTINEL_SECONDS = 0

MAX_LISTS = 4

_CONFIG_KEYS = {
    "config_number",
    "selector_string",
    "lists",
    "no_recording_text",
    "max_recording_time",
    "default_engine_number",
}

_FILENAME_RE = re.compile(r"^app_runtime_config_file_(\d+)\.(json|csv)$")


class Mode(str, Enum):
    GUIDED = "guided"
    FREE_RECORDING = "free_recording"
    TEXT_ONLY = "text_only"


@dataclass(frozen=True)
class PromptPair:
    """One ⟨text, seconds⟩ recording instruction; seconds=None means no recording."""

    text: str
    seconds: int | None = None


@dataclass(frozen=True)
class PromptList:
    prompts: tuple[PromptPair, ...]

    def __len__(self) -> int:
        return len(self.prompts)


@dataclass(frozen=True)
class RuntimeConfig:
    config_number: int
    selector_string: str = ""
    lists: tuple[PromptList, ...] = ()
    mode: Mode = Mode.FREE_RECORDING
    no_recording_text: str = DEFAULT_NO_RECORDING_TEXT
    max_recording_time: int = DEFAULT_MAX_RECORDING_TIME
    default_engine_number: int = 0


@dataclass(frozen=True)
class Choose:
    """The user must pick one of list_count lists; selector_string titles the popup."""

    selector_string: str
    list_count: int


SelectionRequirement = Choose | None


def _is_sentinel(pair_index: int, list_index: int, text: str, seconds) -> bool:
    return (
        list_index == 0
        and pair_index == 0
        and text == SENTINEL_TEXT
        and seconds == SENTINEL_SECONDS
    )


def _classify(lists: tuple[PromptList, ...]) -> Mode:
    if not lists:
        return Mode.FREE_RECORDING
    first = lists[0].prompts[0]
    if first.text == SENTINEL_TEXT and first.seconds == SENTINEL_SECONDS:
        return Mode.TEXT_ONLY
    return Mode.GUIDED


def parse_runtime_config(raw: bytes, expected_number: int) -> RuntimeConfig:
    """Parse a fetched runtime-config body.

    A zero-length (or whitespace-only) body is the free-recording special
    case. config_number always comes from expected_number, the number the
    body was fetched under.
    """
    if not raw.strip():
        return RuntimeConfig(config_number=expected_number)

    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"not a valid JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be a JSON object")

    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise MalformedDocument(f"unknown keys: {sorted(unknown)}")

    raw_lists = doc.get("lists", [])
    if not isinstance(raw_lists, list):
        raise MalformedDocument('"lists" must be an array')
    if len(raw_lists) > MAX_LISTS:
        raise TooManyLists(f"{len(raw_lists)} lists declared, at most {MAX_LISTS} allowed")

    max_recording_time = _opt_positive_int(
        doc, "max_recording_time", DEFAULT_MAX_RECORDING_TIME
    )
    default_engine_number = _opt_nonnegative_int(doc, "default_engine_number", 0)
    no_recording_text = _opt_str(doc, "no_recording_text", DEFAULT_NO_RECORDING_TEXT)
    selector_string = _opt_str(doc, "selector_string", "")

    lists: list[PromptList] = []
    for li, raw_list in enumerate(raw_lists):
        if not isinstance(raw_list, dict) or set(raw_list) != {"prompts"}:
            raise MalformedDocument(f"list {li} must be an object with a single 'prompts' key")
        raw_prompts = raw_list["prompts"]
        if not isinstance(raw_prompts, list) or not raw_prompts:
            raise MalformedDocument(f"list {li} must hold at least one prompt pair")
        prompts: list[PromptPair] = []
        for pi, raw_pair in enumerate(raw_prompts):
            prompts.append(
                _parse_pair(raw_pair, li, pi, max_recording_time)
            )
        lists.append(PromptList(prompts=tuple(prompts)))

    if len(lists) >= 2 and not selector_string:
        raise MalformedDocument("selector_string is required with two or more lists")

    return RuntimeConfig(
        config_number=expected_number,
        selector_string=selector_string,
        lists=tuple(lists),
        mode=_classify(tuple(lists)),
        no_recording_text=no_recording_text,
        max_recording_time=max_recording_time,
        default_engine_number=default_engine_number,
    )


def _parse_pair(raw_pair, list_index: int, pair_index: int, max_seconds: int) -> PromptPair:
    where = f"list {list_index} pair {pair_index}"
    if not isinstance(raw_pair, dict) or set(raw_pair) - {"text", "seconds"}:
        raise MalformedDocument(f"{where}: pairs carry only 'text' and 'seconds'")
    text = raw_pair.get("text")
    if not isinstance(text, str):
        raise MalformedDocument(f"{where}: text must be a string")
    seconds = raw_pair.get("seconds")
    if seconds is not None and (isinstance(seconds, bool) or not isinstance(seconds, int)):
        raise MalformedDocument(f"{where}: seconds must be an integer or null")

    if _is_sentinel(pair_index, list_index, text, seconds):
        return PromptPair(text=text, seconds=seconds)

    if not text.strip():
        raise EmptyPromptText(f"{where}: prompt text is empty")
    if seconds is not None:
        if seconds < 1:
            raise NonPositiveSeconds(f"{where}: seconds={seconds}")
        if seconds > max_seconds:
            raise MalformedDocument(
                f"{where}: seconds={seconds} exceeds max_recording_time={max_seconds}"
            )
    return PromptPair(text=text, seconds=seconds)


def _opt_positive_int(doc: dict, key: str, default: int) -> int:
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise MalformedDocument(f'"{key}" must be a positive integer')
    return value


def _opt_nonnegative_int(doc: dict, key: str, default: int) -> int:
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise MalformedDocument(f'"{key}" must be a non-negative integer')
    return value


def _opt_str(doc: dict, key: str, default: str) -> str:
    value = doc.get(key, default)
    if not isinstance(value, str):
        raise MalformedDocument(f'"{key}" must be a string')
    return value


def serialize_runtime_config(config: RuntimeConfig) -> bytes:
    """Canonical emission; parse(serialize(c), c.config_number) == c."""
    doc = {
        "config_number": config.config_number,
        "selector_string": config.selector_string,
        "lists": [
            {"prompts": [{"text": p.text, "seconds": p.seconds} for p in pl.prompts]}
            for pl in config.lists
        ],
        "no_recording_text": config.no_recording_text,
        "max_recording_time": config.max_recording_time,
        "default_engine_number": config.default_engine_number,
    }
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def required_selection(config: RuntimeConfig) -> SelectionRequirement:
    """Whether the user must pick a list before prompting starts.

    With a single list that one is used; only guided configs with two or
    more lists pop the selector.
    """
    if config.mode is not Mode.GUIDED or len(config.lists) <= 1:
        return None
    return Choose(selector_string=config.selector_string, list_count=len(config.lists))


def config_number_from_filename(name: str) -> int:
    """Extract the number from app_runtime_config_file_<n>.json (or legacy .csv)."""
    match = _FILENAME_RE.match(name)
    if match is None:
        raise BadConfigName(name)
    return int(match.group(1))


def bundled_default_config(number: int = 0) -> RuntimeConfig:
    """The offline-safe fallback: free recording, no prompts."""
    return RuntimeConfig(config_number=number)
