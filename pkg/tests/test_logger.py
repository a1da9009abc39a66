import io
import json
import logging

import pytest

from app.utils.exceptions import ConfigurationError
from app.utils.logger import log_event, setup_logger


def test_json_records_carry_event_fields():
    stream = io.StringIO()
    logger = setup_logger("scene_memory_test.json", level="debug", stream=stream)
    log_event(logger, "Experiment finished", label="fifo[10]_zipf1_seed0", mhr=0.35, warmup_step=None)

    record = json.loads(stream.getvalue())
    assert record["level"] == "INFO"
    assert record["message"] == "Experiment finished"
    assert record["label"] == "fifo[10]_zipf1_seed0"
    assert record["mhr"] == 0.35
    assert record["warmup_step"] is None


def test_text_format_appends_fields():
    stream = io.StringIO()
    logger = setup_logger("scene_memory_test.text", format_type="text", stream=stream)
    log_event(logger, "Sweep started", level=logging.WARNING, grid_points=12, jobs=2)
    line = stream.getvalue().strip()
    assert " - WARNING - Sweep started grid_points=12 jobs=2" in line


def test_setup_is_idempotent():
    stream = io.StringIO()
    setup_logger("scene_memory_test.repeat", stream=stream)
    logger = setup_logger("scene_memory_test.repeat", stream=stream)
    logger.info("once")
    assert len(logger.handlers) == 1
    assert len(stream.getvalue().splitlines()) == 1


def test_invalid_settings():
    with pytest.raises(ConfigurationError) as info:
        setup_logger("scene_memory_test.bad", level="chatty")
    assert info.value.key == "LOG_LEVEL"
    with pytest.raises(ConfigurationError) as info:
        setup_logger("scene_memory_test.bad", format_type="xml")
    assert info.value.key == "LOG_FORMAT"
