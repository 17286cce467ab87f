"""Pure, I/O-free protocol core shared by server, client, simulator, and UI."""

from .config import (
    DEFAULT_MAX_RECORDING_TIME,
    DEFAULT_NO_RECORDING_TEXT,
    MAX_LISTS,
    SENTINEL_SECONDS,
    SENTINEL_TEXT,
    Choose,
    Mode,
    PromptList,
    PromptPair,
    RuntimeConfig,
    SelectionRequirement,
    bundled_default_config,
    config_number_from_filename,
    parse_runtime_config,
    required_selection,
    serialize_runtime_config,
)
from .errors import (
    BadConfigName,
    CodesExhausted,
    EmptyPromptText,
    ForbiddenField,
    MalformedDocument,
    NoEndpoint,
    NoListSelected,
    NonPositiveSeconds,
    NotARecordingStep,
    PersonalInfoViolation,
    ProtocolError,
    TooManyLists,
    TypeMismatch,
    UnknownQuestion,
)
from .personal_info import (
    AGE_CAP,
    AGE_CAP_TOKEN,
    FORBIDDEN_QUESTION_IDS,
    PersonalInfoSchema,
    Question,
    default_question_schema,
    schema_from_doc,
    schema_to_doc,
    serialize_schema,
    validate_personal_info,
)
from .samples import (
    SampleUpload,
    is_phone_hash,
    new_phone_hash,
    new_sample_id,
    sample_from_doc,
    sample_to_doc,
)
from .session import (
    PromptStep,
    SessionState,
    StepKind,
    effective_record_seconds,
    new_session,
    next_prompt,
    register_recording,
    reset_session,
    select_list,
    session_expired,
    start_over,
)
from .status import (
    DEFAULT_DYNAMIC_ENDPOINT,
    DEFAULT_LANGUAGES,
    DEFAULT_RESET_TIME_MINUTES,
    LocalConfigStatus,
    generate_neighbor_code,
    reset_counts,
    resolve_server_endpoint,
    should_upload_status,
    status_from_doc,
    status_to_doc,
    validate_status_doc,
)
from .timeutil import filename_timestamp, format_utc, parse_utc, utc_now
