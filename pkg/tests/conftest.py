import pytest

from mcfc.codec import letter_plan, rgb_image_plan


@pytest.fixture(scope="session")
def rgb_plan():
    return rgb_image_plan()


@pytest.fixture(scope="session")
def letters():
    return letter_plan()
