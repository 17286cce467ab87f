from .registry import (
    EngineKind,
    EngineRegistry,
    EngineResponse,
    EngineSpec,
    RemoteUnreachable,
    ReservedNumber,
    parse_engine_flag,
    run_engine,
)
