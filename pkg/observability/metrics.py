from prometheus_client import Counter, Gauge

closed_form_evaluations = Counter(
    "outage_closed_form_evaluations_total",
    "Number of closed-form outage evaluations",
    ["method"],
)

precision_escalations = Counter(
    "outage_precision_escalations_total",
    "Closed-form sums re-evaluated in extended precision after cancellation",
)

series_reroutes = Counter(
    "outage_series_reroutes_total",
    "System-outage series rerouted to numerical quadrature",
)

mc_trials = Counter(
    "outage_mc_trials_total",
    "Monte Carlo trials drawn",
    ["kind"],
)

validation_failures = Gauge(
    "outage_last_validation_failures",
    "Failed comparisons in the most recent validate run",
)


def record_closed_form(method: str) -> None:
    try:
        closed_form_evaluations.labels(method=method).inc()
    except Exception:
        pass


def record_escalation() -> None:
    try:
        precision_escalations.inc()
    except Exception:
        pass


def record_reroute() -> None:
    try:
        series_reroutes.inc()
    except Exception:
        pass


def record_mc_trials(kind: str, trials: int) -> None:
    try:
        mc_trials.labels(kind=kind).inc(trials)
    except Exception:
        pass


def set_validation_failures(count: int) -> None:
    try:
        validation_failures.set(count)
    except Exception:
        pass
