"""
Tests for stage progress events.
"""

import logging

from crane_behavior.events import (
    LoggingObserver,
    RecordingObserver,
    StageEmitter,
    StageEventKind,
)


class _Stage(StageEmitter):
    stage = "demo"


def test_emitter_without_observer() -> None:
    """Test that emitting without an observer is a no-op."""
    _Stage().emit(StageEventKind.NOTE, "nothing listens")


def test_recording_observer() -> None:
    """Test that events carry the stage name, index and payload."""
    observer = RecordingObserver()
    stage = _Stage(observer)
    stage.emit(StageEventKind.CELL_FINISHED, "cell done", index=3, data={"score": 1.5})
    (event,) = observer.events
    assert event.to_dict() == {
        "kind": "cell-finished",
        "stage": "demo",
        "message": "cell done",
        "index": 3,
        "data": {"score": 1.5},
    }


def test_set_observer() -> None:
    """Test swapping the observer after construction."""
    stage = _Stage()
    observer = RecordingObserver()
    stage.set_observer(observer)
    stage.emit(StageEventKind.NOTE, "hello")
    assert len(observer.events) == 1


def test_logging_observer(caplog) -> None:
    """Test that the logging observer writes one line per event."""
    stage = _Stage(LoggingObserver(logging.WARNING))
    with caplog.at_level(logging.WARNING):
        stage.emit(StageEventKind.STAGE_STARTED, "starting", index=0)
    assert "demo #0: starting" in caplog.text
