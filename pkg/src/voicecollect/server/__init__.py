from .app import create_app
from .service import CollectionService, ConfigNotFound, ConfigRegistry, EngineDispatcher, IngestReceipt
