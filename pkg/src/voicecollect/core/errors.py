"""Exception hierarchy for the protocol core.

Every error raised by the pure protocol functions derives from
ProtocolError so callers at the service boundary can map the whole
family onto one wire-level rejection.
"""


class ProtocolError(Exception):
    """Base class for all protocol-level rejections."""


# --- runtime config grammar ------------------------------------------------


class MalformedDocument(ProtocolError):
    """Document does not conform to the runtime-config schema."""


class TooManyLists(MalformedDocument):
    """More than four prompt lists were declared."""


class EmptyPromptText(MalformedDocument):
    """A prompt pair has empty or whitespace-only text."""


class NonPositiveSeconds(MalformedDocument):
    """A prompt pair declares seconds < 1 (and is not the text-only sentinel)."""


class BadConfigName(ProtocolError):
    """Filename does not follow the app_runtime_config_file_<number> pattern."""


# --- session state machine -------------------------------------------------


class NoListSelected(ProtocolError):
    """A guided prompt was requested before a list was selected."""


class NotARecordingStep(ProtocolError):
    """Recording duration requested for a step that does not record."""


# --- personal information --------------------------------------------------


class PersonalInfoViolation(ProtocolError):
    """Base class for personal-information validation failures."""


class ForbiddenField(PersonalInfoViolation):
    """Answer keyed by an identifier that must never be collected."""


class UnknownQuestion(PersonalInfoViolation):
    """Answer keyed by an id absent from the schema."""


class TypeMismatch(PersonalInfoViolation):
    """Answer value has the wrong shape for its question kind."""


# --- settings / endpoints --------------------------------------------------


class NoEndpoint(ProtocolError):
    """Dynamic resolution is off and no static server address is set."""


class CodesExhausted(ProtocolError):
    """All 10^6 six-digit neighbor codes are already taken."""
