from .store import (
    DataStore,
    ExportBundle,
    StorageFailure,
    StoredResponse,
    StoredSample,
    audio_extension,
    media_type_for_extension,
)
