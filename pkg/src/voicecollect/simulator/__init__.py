from .scenario import (
    ConnectivitySchedule,
    ScenarioReport,
    ScenarioSpec,
    SetupFailure,
    report_to_doc,
    run_scenario,
    verify_report,
)
