"""Prompting state machine: round-robin cursor, step mapping, expiry.

All functions are pure; they take the clock as an argument and return new
values instead of mutating. The cursor only advances in register_recording,
never in next_prompt, so an aborted recording re-displays the same prompt.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from enum import Enum

from .config import Mode, RuntimeConfig
from .errors import NoListSelected, NotARecordingStep
from .status import LocalConfigStatus


class StepKind(str, Enum):
    RECORD = "record"
    TEXT_ONLY = "text_only"
    TERMINAL = "terminal"
    FREE = "free"


@dataclass(frozen=True)
class PromptStep:
    kind: StepKind
    text: str = ""
    seconds: int | None = None


@dataclass(frozen=True)
class SessionState:
    phone_hash: str
    last_activity: datetime
    selected_list_index: int | None = None
    selected_list_length: int | None = None
    cursor: int = 0
    last_recording_time: datetime | None = None


def new_session(phone_hash: str, config: RuntimeConfig, now: datetime) -> SessionState:
    """Fresh session; a single guided list is selected implicitly."""
    session = SessionState(phone_hash=phone_hash, last_activity=now)
    if config.mode is Mode.GUIDED and len(config.lists) == 1:
        session = select_list(session, config, 0)
    return session


def select_list(session: SessionState, config: RuntimeConfig, index: int) -> SessionState:
    if not 0 <= index < len(config.lists):
        raise NoListSelected(f"list index {index} out of range")
    return replace(
        session,
        selected_list_index=index,
        selected_list_length=len(config.lists[index]),
        cursor=0,
    )


def next_prompt(session: SessionState, config: RuntimeConfig) -> PromptStep:
    """The step to show now. Does not advance the cursor."""
    if config.mode is Mode.FREE_RECORDING:
        return PromptStep(kind=StepKind.FREE)
    if config.mode is Mode.TEXT_ONLY:
        return PromptStep(kind=StepKind.TEXT_ONLY, text=_first_meaningful_text(config))

    if session.selected_list_index is None:
        raise NoListSelected("guided mode requires a selected list")
    prompts = config.lists[session.selected_list_index].prompts
    pair = prompts[session.cursor]
    if pair.seconds is not None:
        return PromptStep(kind=StepKind.RECORD, text=pair.text, seconds=pair.seconds)
    if session.cursor == len(prompts) - 1:
        return PromptStep(kind=StepKind.TERMINAL, text=pair.text)
    return PromptStep(kind=StepKind.TEXT_ONLY, text=pair.text)


def _first_meaningful_text(config: RuntimeConfig) -> str:
    # Text-only configs start with the sentinel pair; show the first real text.
    for pair in config.lists[0].prompts[1:]:
        if pair.text.strip():
            return pair.text
    return ""


def effective_record_seconds(step: PromptStep, config: RuntimeConfig) -> int:
    """Recording window: the pair's own seconds, or the config cap in free mode."""
    if step.kind is StepKind.RECORD:
        assert step.seconds is not None
        return step.seconds
    if step.kind is StepKind.FREE:
        return config.max_recording_time
    raise NotARecordingStep(step.kind.value)


def register_recording(
    session: SessionState, status: LocalConfigStatus, now: datetime
) -> tuple[SessionState, LocalConfigStatus]:
    """Account for a completed recording or text-only submission.

    Bumps the visible counter, advances the round-robin cursor (guided
    mode), and stamps the activity clocks on both session and status.
    """
    cursor = session.cursor
    if session.selected_list_length:
        cursor = (cursor + 1) % session.selected_list_length
    new_sess = replace(
        session, cursor=cursor, last_activity=now, last_recording_time=now
    )
    new_status = replace(
        status, current_count=status.current_count + 1, last_recording_time=now
    )
    return new_sess, new_status


def session_expired(
    session: SessionState, status: LocalConfigStatus, now: datetime
) -> bool:
    """Strictly more than reset_time minutes since the last activity."""
    return now - session.last_activity > timedelta(minutes=status.reset_time)


def reset_session(session: SessionState, config: RuntimeConfig, now: datetime) -> SessionState:
    """After expiry: cursor to 0; multi-list configs must be re-selected."""
    session = replace(session, cursor=0, last_activity=now)
    if len(config.lists) >= 2:
        session = replace(session, selected_list_index=None, selected_list_length=None)
    return session


def start_over(session: SessionState, now: datetime) -> SessionState:
    """Leave the terminal screen: back to the top of the selected list."""
    return replace(session, cursor=0, last_activity=now)
