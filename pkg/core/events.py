"""
Run lifecycle events

Solvers publish what they are doing; the application decides what to log.
"""

from collections import defaultdict, deque
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Deque, Dict, List, Optional, Tuple
import logging

logger = logging.getLogger('wealthkin.events')

Listener = Callable[['Event'], None]


class EventType(Enum):
    # Monte Carlo
    RUN_STARTED = "run_started"
    STEP_COMPLETED = "step_completed"
    SNAPSHOT_RECORDED = "snapshot_recorded"
    RUN_FINISHED = "run_finished"

    # Fokker-Planck
    FP_STARTED = "fp_started"
    FP_STATIONARY = "fp_stationary"
    FP_FINISHED = "fp_finished"

    BUNDLE_WRITTEN = "bundle_written"
    VALIDATION_FAILED = "validation_failed"


@dataclass
class Event:
    """One published event; ``data`` is a dict or a ValidationReport"""
    event_type: EventType
    data: Any
    timestamp: datetime
    source: Optional[str] = None

    def __repr__(self):
        return f"Event({self.event_type.value}, source={self.source}, time={self.timestamp})"


class EventBus:
    """
    Synchronous publish/subscribe hub

    Listeners run highest priority first; a failing listener is logged and
    never interrupts the solver that emitted the event.
    """

    def __init__(self, max_history: int = 1000):
        self._listeners: Dict[EventType, List[Tuple[int, Listener]]] = defaultdict(list)
        self._history: Deque[Event] = deque(maxlen=max_history)
        self._enabled = True

    def subscribe(self, event_type: EventType, callback: Listener, priority: int = 0):
        listeners = self._listeners[event_type]
        listeners.append((priority, callback))
        listeners.sort(key=lambda entry: entry[0], reverse=True)
        logger.debug(f"Subscribed to {event_type.value}: {_name(callback)}")

    def unsubscribe(self, event_type: EventType, callback: Listener):
        self._listeners[event_type] = [
            entry for entry in self._listeners[event_type] if entry[1] != callback
        ]

    def emit(self, event_type: EventType, data: Any = None, source: Optional[str] = None):
        """
        Publish an event to every subscriber of its type

        Args:
            event_type: The event to emit
            data: Payload handed to listeners
            source: Name of the emitting component
        """
        if not self._enabled:
            return

        event = Event(event_type, data, datetime.now(), source)
        self._history.append(event)

        for _, callback in list(self._listeners[event_type]):
            try:
                callback(event)
            except Exception as e:
                logger.error(f"Listener {_name(callback)} failed on {event_type.value}: {e}", exc_info=True)

    def get_history(self, event_type: Optional[EventType] = None, limit: int = 100) -> List[Event]:
        """Most recent events, oldest first"""
        events = [e for e in self._history if event_type is None or e.event_type == event_type]
        return events[-limit:]

    def disable(self):
        self._enabled = False

    def __repr__(self):
        count = sum(len(entries) for entries in self._listeners.values())
        return f"EventBus(listeners={count}, history={len(self._history)})"


def _name(callback: Listener) -> str:
    return getattr(callback, '__name__', repr(callback))


_event_bus: Optional[EventBus] = None


def get_event_bus() -> EventBus:
    """Process-wide bus shared by the application and its services"""
    global _event_bus
    if _event_bus is None:
        _event_bus = EventBus()
    return _event_bus


def reset_event_bus():
    """Drop the shared bus; the next get_event_bus() builds a fresh one"""
    global _event_bus
    _event_bus = None
