import pytest

from cramsim import device


@pytest.fixture(scope="session")
def params():
    """Device parameters calibrated once against the built-in anchors."""
    return device.calibrate_from_anchors()
