import pytest
import structlog

from wsawlab.infrastructure.settings import get_settings


@pytest.fixture(autouse=True)
def fresh_runtime_state():
    """Drop cached settings and any logger bound to a CliRunner stream."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
    structlog.reset_defaults()
