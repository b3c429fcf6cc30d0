"""Results log and session persistence.

Two files describe a tuning session.

``<name>.log`` is the human-readable results log, the exact bytes fed back
to the LLM inside analysis prompts.  Grammar, one line per trial::

    tau = <decimal>, Fitness: <decimal>[, Std: <decimal>]\n

Decimals use the shortest representation that round-trips to the same IEEE
double; integral values drop the trailing ".0".

``<name>.session.jsonl`` is the machine-readable record, one JSON object
per line, written in chronological order:

* line 1: ``{"record": "header", "schema_version": 1, "config": {...}}``
* ``{"record": "exchange", "prompt", "response", "latency_ms", "timestamp",
  "attempt"}``, one per backend call, in call order
* ``{"record": "trial", "tau", "replicates": [{"seed", "best_f", "score",
  "final_sigma", "generations_run"}, ...], "mean_score", "std_score"}``
* last line, once the session leaves the running state:
  ``{"record": "status", "status", ["best_tau"], ["error"]}``

Exchanges belonging to one proposal start at attempt 0, which is how the
writer interleaves them with their trials.  Unknown top-level fields in any
record survive a read/write round trip.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .es import EsRunResult, EsTemplate, ObjectiveSpec
from .llm import LlmExchange
from .models import (
    STATUS_ABORTED,
    STATUS_COMPLETED,
    STATUS_RUNNING,
    EmptySessionError,
    SessionConfig,
    Trial,
    TuningSession,
)

__all__ = [
    "SCHEMA_VERSION",
    "SchemaVersionError",
    "SessionFileError",
    "append_log_line",
    "format_log_line",
    "format_number",
    "read_session",
    "render_log",
    "trial_stats",
    "write_session",
]

SCHEMA_VERSION = 1

_STATUSES = (STATUS_RUNNING, STATUS_COMPLETED, STATUS_ABORTED)


class SessionFileError(ValueError):
    """A session file could not be parsed.

    ``line_number`` names the offending line (1-based); ``partial`` holds
    the session reconstructed from everything before it.
    """

    def __init__(self, message: str, line_number: int = 0, partial: TuningSession | None = None):
        super().__init__(message)
        self.line_number = line_number
        self.partial = partial


class SchemaVersionError(SessionFileError):
    """The file's schema_version is not supported by this build."""


def format_number(x: float) -> str:
    """Shortest decimal string that parses back to exactly ``x``."""
    if not math.isfinite(x):
        raise ValueError("only finite numbers appear in logs")
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def format_log_line(tau: float, fitness: float, std: float | None = None) -> str:
    line = f"tau = {format_number(tau)}, Fitness: {format_number(fitness)}"
    if std is not None:
        line += f", Std: {format_number(std)}"
    return line


def append_log_line(trial: Trial, log: str, include_std: bool = True) -> str:
    """Return ``log`` with the trial's result line appended."""
    std = trial.std_score if include_std else None
    return log + format_log_line(trial.tau, trial.mean_score, std) + "\n"


def render_log(trials: Iterable[Trial], include_std: bool = True) -> str:
    text = ""
    for trial in trials:
        text = append_log_line(trial, text, include_std)
    return text


def trial_stats(scores: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (n-1; 0 for n=1)."""
    n = len(scores)
    if n == 0:
        raise ValueError("need at least one score")
    mean = sum(scores) / n
    if n == 1:
        return mean, 0.0
    var = sum((s - mean) ** 2 for s in scores) / (n - 1)
    return mean, math.sqrt(var)


_EXCHANGE_KEYS = ("prompt", "response", "latency_ms", "timestamp", "attempt")
_TRIAL_KEYS = ("tau", "replicates", "mean_score", "std_score")
_RESULT_KEYS = ("seed", "best_f", "score", "final_sigma", "generations_run")


def _config_dict(cfg: SessionConfig) -> dict[str, Any]:
    return {
        "objective": {"name": cfg.objective.name, "dimension": cfg.objective.dimension},
        "es_template": {
            "sigma0": cfg.es_template.sigma0,
            "dimension": cfg.es_template.dimension,
            "max_generations": cfg.es_template.max_generations,
            "init_low": cfg.es_template.init_low,
            "init_high": cfg.es_template.init_high,
        },
        "master_seed": cfg.master_seed,
        "replicates": cfg.replicates,
        "budget": cfg.budget,
        "duplicate_tolerance": cfg.duplicate_tolerance,
        "max_propose_retries": cfg.max_propose_retries,
        "log_std": cfg.log_std,
    }


def _exchange_record(exchange: LlmExchange) -> dict[str, Any]:
    rec: dict[str, Any] = {"record": "exchange"}
    for key in _EXCHANGE_KEYS:
        rec[key] = getattr(exchange, key)
    rec.update(exchange.extras)
    return rec


def _trial_record(trial: Trial) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "record": "trial",
        "tau": trial.tau,
        "replicates": [
            {key: getattr(r, key) for key in _RESULT_KEYS} for r in trial.results
        ],
        "mean_score": trial.mean_score,
        "std_score": trial.std_score,
    }
    rec.update(trial.extras)
    return rec


def _exchange_groups(exchanges: Sequence[LlmExchange]) -> list[list[LlmExchange]]:
    """Split the exchange stream into per-proposal groups (attempt 0 starts one)."""
    groups: list[list[LlmExchange]] = []
    for exchange in exchanges:
        if exchange.attempt == 0 or not groups:
            groups.append([])
        groups[-1].append(exchange)
    return groups


def session_records(session: TuningSession) -> list[dict[str, Any]]:
    """All records for a session, in the order they happened."""
    header: dict[str, Any] = {
        "record": "header",
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(session.config),
    }
    header.update(session.extras.get("header", {}))
    records = [header]

    groups = _exchange_groups(session.exchanges)
    for i, trial in enumerate(session.trials):
        if i < len(groups):
            records.extend(_exchange_record(e) for e in groups[i])
        records.append(_trial_record(trial))
    for group in groups[len(session.trials):]:
        records.extend(_exchange_record(e) for e in group)

    if session.status != STATUS_RUNNING:
        status: dict[str, Any] = {"record": "status", "status": session.status}
        if session.best_tau is not None:
            status["best_tau"] = session.best_tau
        if session.error is not None:
            status["error"] = session.error
        status.update(session.extras.get("status", {}))
        records.append(status)
    return records


def write_session(session: TuningSession, path) -> None:
    lines = [json.dumps(rec, separators=(",", ":")) for rec in session_records(session)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _extras(rec: dict[str, Any], known: Sequence[str]) -> dict[str, Any]:
    skip = set(known) | {"record"}
    return {k: v for k, v in rec.items() if k not in skip}


def _parse_config(raw: dict[str, Any]) -> SessionConfig:
    obj = raw["objective"]
    tpl = raw["es_template"]
    return SessionConfig(
        objective=ObjectiveSpec(name=obj["name"], dimension=int(obj["dimension"])),
        es_template=EsTemplate(
            sigma0=float(tpl["sigma0"]),
            dimension=int(tpl["dimension"]),
            max_generations=int(tpl["max_generations"]),
            init_low=float(tpl["init_low"]),
            init_high=float(tpl["init_high"]),
        ),
        master_seed=int(raw["master_seed"]),
        replicates=int(raw["replicates"]),
        budget=int(raw["budget"]),
        duplicate_tolerance=float(raw["duplicate_tolerance"]),
        max_propose_retries=int(raw["max_propose_retries"]),
        log_std=bool(raw["log_std"]),
    )


def _parse_trial(rec: dict[str, Any]) -> Trial:
    results = [
        EsRunResult(
            best_f=float(r["best_f"]),
            score=float(r["score"]),
            final_sigma=float(r["final_sigma"]),
            generations_run=int(r["generations_run"]),
            seed=int(r["seed"]),
        )
        for r in rec["replicates"]
    ]
    return Trial(
        tau=float(rec["tau"]),
        results=results,
        mean_score=float(rec["mean_score"]),
        std_score=float(rec["std_score"]),
        extras=_extras(rec, _TRIAL_KEYS),
    )


def _parse_exchange(rec: dict[str, Any]) -> LlmExchange:
    return LlmExchange(
        prompt=rec["prompt"],
        response=rec["response"],
        latency_ms=float(rec["latency_ms"]),
        timestamp=rec["timestamp"],
        attempt=int(rec["attempt"]),
        extras=_extras(rec, _EXCHANGE_KEYS),
    )


def read_session(path) -> TuningSession:
    """Rebuild a TuningSession from its record file.

    Raises EmptySessionError for an empty file, SchemaVersionError for an
    unsupported version, and SessionFileError (with line number and the
    partial session parsed so far) for any corrupt line.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise EmptySessionError(f"session file {path} is empty")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise SessionFileError(f"line 1: invalid JSON: {exc}", line_number=1) from exc
    if not isinstance(header, dict) or header.get("record") != "header":
        raise SessionFileError("line 1: expected a header record", line_number=1)
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"line 1: schema_version {version!r} not supported (this build reads {SCHEMA_VERSION})",
            line_number=1,
        )
    try:
        config = _parse_config(header["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionFileError(f"line 1: bad config: {exc}", line_number=1) from exc

    session = TuningSession(config=config)
    header_extras = _extras(header, ("schema_version", "config"))
    if header_extras:
        session.extras["header"] = header_extras

    saw_status = False
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue

        def _fail(message: str) -> SessionFileError:
            return SessionFileError(
                f"line {lineno}: {message}", line_number=lineno, partial=session
            )

        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise _fail(f"invalid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise _fail("record is not an object")
        if saw_status:
            raise _fail("records after the status record")
        kind = rec.get("record")
        try:
            if kind == "trial":
                session.trials.append(_parse_trial(rec))
            elif kind == "exchange":
                session.exchanges.append(_parse_exchange(rec))
            elif kind == "status":
                status = rec.get("status")
                if status not in _STATUSES:
                    raise _fail(f"unknown status {status!r}")
                session.status = status
                if "best_tau" in rec:
                    session.best_tau = float(rec["best_tau"])
                if "error" in rec:
                    session.error = rec["error"]
                status_extras = _extras(rec, ("status", "best_tau", "error"))
                if status_extras:
                    session.extras["status"] = status_extras
                saw_status = True
            else:
                raise _fail(f"unknown record type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SessionFileError):
                raise
            raise _fail(f"bad {kind} record: {exc}") from exc
    return session
