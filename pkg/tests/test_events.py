"""
Tests for the event bus
"""

from core.events import EventBus, EventType, get_event_bus, reset_event_bus


def test_priority_order():
    bus = EventBus()
    calls = []
    bus.subscribe(EventType.RUN_STARTED, lambda e: calls.append('low'), priority=0)
    bus.subscribe(EventType.RUN_STARTED, lambda e: calls.append('high'), priority=10)
    bus.emit(EventType.RUN_STARTED, {'seed': 0})
    assert calls == ['high', 'low']


def test_failing_listener_is_isolated():
    bus = EventBus()
    calls = []

    def broken(event):
        raise RuntimeError("boom")

    bus.subscribe(EventType.STEP_COMPLETED, broken, priority=1)
    bus.subscribe(EventType.STEP_COMPLETED, lambda e: calls.append(e.data))
    bus.emit(EventType.STEP_COMPLETED, 3)
    assert calls == [3]


def test_unsubscribe_and_disable():
    bus = EventBus()
    calls = []
    listener = calls.append
    bus.subscribe(EventType.FP_FINISHED, listener)
    bus.unsubscribe(EventType.FP_FINISHED, listener)
    bus.emit(EventType.FP_FINISHED)
    assert calls == []

    bus.subscribe(EventType.FP_FINISHED, listener)
    bus.disable()
    bus.emit(EventType.FP_FINISHED)
    assert calls == []
    assert len(bus.get_history(EventType.FP_FINISHED)) == 1


def test_history_limit():
    bus = EventBus(max_history=3)
    for step in range(5):
        bus.emit(EventType.STEP_COMPLETED, step)
    assert [e.data for e in bus.get_history()] == [2, 3, 4]


def test_global_bus_reset():
    bus = get_event_bus()
    assert get_event_bus() is bus
    reset_event_bus()
    assert get_event_bus() is not bus
