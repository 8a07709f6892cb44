# Licensed under the MIT License.
"""
Test for the framed JSON transport used by trial workers.
"""
import io

import pytest
from hamcrest import assert_that, is_

import vr_experiments as experiments
import vr_jsonrpc as jsonrpc
import vr_settings


def test_message_framing():
    assert_that(
        jsonrpc.encode_message({"id": "1", "method": "exit"}),
        is_(b'Content-Length: 29\r\n\r\n{"id": "1", "method": "exit"}'),
    )


def test_messages_read_back_in_order():
    messages = [{"id": "a", "method": "run"}, {"id": "b", "result": {"x": "é"}}]
    stream = io.BytesIO(b"".join(jsonrpc.encode_message(m) for m in messages))
    reader = jsonrpc.JsonReader(stream)
    assert_that([reader.read(), reader.read()], is_(messages))
    with pytest.raises(EOFError):
        reader.read()


def test_truncated_message_is_eof():
    stream = io.BytesIO(jsonrpc.encode_message({"id": "1"})[:-2])
    with pytest.raises(EOFError):
        jsonrpc.JsonReader(stream).read()


def test_missing_length_is_rejected():
    stream = io.BytesIO(b"Content-Type: json\r\n\r\n{}")
    with pytest.raises(ValueError):
        jsonrpc.JsonReader(stream).read()


def test_closed_writer():
    writer = jsonrpc.JsonWriter(io.BytesIO())
    writer.close()
    with pytest.raises(jsonrpc.StreamClosedException):
        writer.write({"id": "1"})


def test_worker_runs_a_trial():
    config = vr_settings.structure_config({"rings": ["Z/2^2"], "experiment": "thm1"})
    (task,) = experiments.build_tasks(config)[:1]
    try:
        result = jsonrpc.run_trial(
            "test-worker",
            vr_settings.unstructure_config(config),
            experiments.REPORT_CONVERTER.unstructure(task),
        )
    finally:
        jsonrpc.shutdown_workers()
    assert_that(result.exception, is_(None))
    record = experiments.REPORT_CONVERTER.structure(
        result.record, experiments.TrialRecord
    )
    assert_that(record, is_(experiments.execute_task(task, config)))
