import json

import pytest

from edrkit.events import (
    DatasetSplit, EventParseError, event_to_json, format_timestamp,
    parse_event, parse_timestamp,
)

VALID_LINE = json.dumps({
    "id": "e-1", "ts": "2025-03-17T09:00:00.250Z", "agent_id": "agent-01",
    "category": "process", "action": "create",
    "subject": {"pid": 4242, "ppid": 1200, "image": "C:\\Windows\\notepad.exe",
                "cmdline": "notepad.exe", "user": "alice", "signed": True,
                "elevated": False},
    "object": "C:\\Windows\\notepad.exe", "bytes_in": 0, "bytes_out": 0,
})


def test_parse_valid_process_create():
    event = parse_event(VALID_LINE)
    assert event.category == "process"
    assert event.action == "create"
    assert event.subject.pid == 4242
    assert event.ts.tzinfo is not None


def test_missing_ts_names_field():
    doc = json.loads(VALID_LINE)
    del doc["ts"]
    with pytest.raises(EventParseError) as err:
        parse_event(json.dumps(doc))
    assert err.value.field_name == "ts"


def test_invalid_category_rejected():
    doc = json.loads(VALID_LINE)
    doc["category"] = "disk"
    with pytest.raises(EventParseError) as err:
        parse_event(json.dumps(doc))
    assert err.value.field_name == "category"


def test_action_must_match_category():
    doc = json.loads(VALID_LINE)
    doc["action"] = "connect"  # network action on a process event
    with pytest.raises(EventParseError) as err:
        parse_event(json.dumps(doc))
    assert err.value.field_name == "action"


def test_malformed_json_rejected():
    with pytest.raises(EventParseError):
        parse_event("{not json")


def test_unparseable_timestamp_names_field():
    doc = json.loads(VALID_LINE)
    doc["ts"] = "yesterday"
    with pytest.raises(EventParseError) as err:
        parse_event(json.dumps(doc))
    assert err.value.field_name == "ts"


def test_naive_timestamp_rejected():
    doc = json.loads(VALID_LINE)
    doc["ts"] = "2025-03-17T09:00:00.250"
    with pytest.raises(EventParseError):
        parse_event(json.dumps(doc))


def test_bytes_only_for_network():
    doc = json.loads(VALID_LINE)
    doc["bytes_out"] = 10
    with pytest.raises(EventParseError):
        parse_event(json.dumps(doc))
    doc.update(category="network", action="connect", object="10.0.0.5:443")
    event = parse_event(json.dumps(doc))
    assert event.bytes_out == 10


def test_unknown_extra_fields_ignored():
    doc = json.loads(VALID_LINE)
    doc["x_custom"] = {"anything": 1}
    event = parse_event(json.dumps(doc))
    assert event.id == "e-1"


def test_roundtrip_preserves_content():
    event = parse_event(VALID_LINE)
    again = parse_event(event_to_json(event))
    assert again == event


def test_timestamp_format_millisecond_utc():
    ts = parse_timestamp("2025-03-17T09:00:00.250Z")
    assert format_timestamp(ts) == "2025-03-17T09:00:00.250Z"
    # non-UTC offsets normalize to UTC
    shifted = parse_timestamp("2025-03-17T10:00:00.250+01:00")
    assert format_timestamp(shifted) == "2025-03-17T09:00:00.250Z"


def test_dataset_split_validation():
    DatasetSplit(0.7, 0.15, 0.15)
    with pytest.raises(ValueError):
        DatasetSplit(0.7, 0.2, 0.2)
    with pytest.raises(ValueError):
        DatasetSplit(1.0, 0.0, 0.0)
