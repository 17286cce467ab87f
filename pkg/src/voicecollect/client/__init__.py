from .client import BACKOFF_BASE_SECONDS, BACKOFF_CAP_SECONDS, CollectorClient, FlushReport
from .store import ClientStore, PersistenceFailure, QueuedSample
from .transport import HttpTransport, Transport, TransportError
