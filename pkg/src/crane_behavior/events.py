"""Progress events for long-running stages.

Grid searches and multi-start solves report through a small observer interface so
the command line, tests, or a notebook can follow progress without depending on the
stage implementation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Mapping, Optional, Protocol

LOGGER = logging.getLogger(__name__)


class StageEventKind(str, Enum):
    """Kinds of events emitted by pipeline stages."""

    STAGE_STARTED = "stage-started"
    CELL_FINISHED = "cell-finished"
    METRIC_RECORDED = "metric-recorded"
    NOTE = "note"


@dataclass(slots=True)
class StageEvent:
    """Structured progress payload."""

    kind: StageEventKind
    stage: str
    message: str
    data: Mapping[str, Any] = field(default_factory=dict)
    index: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "stage": self.stage,
            "message": self.message,
            "index": self.index,
            "data": dict(self.data),
        }


class StageObserver(Protocol):
    """Observer interface for streaming stage events."""

    def notify(self, event: StageEvent) -> None:  # pragma: no cover - interface
        """Handle a new stage event."""


class LoggingObserver:
    """Forwards events to the standard logger."""

    def __init__(self, level: int = logging.INFO) -> None:
        self.level = level

    def notify(self, event: StageEvent) -> None:
        suffix = f" #{event.index}" if event.index is not None else ""
        LOGGER.log(self.level, "%s%s: %s", event.stage, suffix, event.message)


class RecordingObserver:
    """Keeps every event in memory; handy in tests."""

    def __init__(self) -> None:
        self.events: List[StageEvent] = []

    def notify(self, event: StageEvent) -> None:
        self.events.append(event)


class StageEmitter:
    """Mixin-style helper that owns an optional observer."""

    stage: str = "stage"

    def __init__(self, observer: StageObserver | None = None) -> None:
        self._observer = observer

    def set_observer(self, observer: StageObserver | None) -> None:
        self._observer = observer

    def emit(
        self,
        kind: StageEventKind,
        message: str,
        *,
        index: int | None = None,
        data: Mapping[str, Any] | None = None,
    ) -> None:
        if self._observer is None:
            return
        self._observer.notify(
            StageEvent(kind=kind, stage=self.stage, message=message, index=index, data=data or {})
        )
