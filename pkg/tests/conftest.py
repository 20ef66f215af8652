import pytest
from hypothesis import HealthCheck, settings

from helpers import BACKENDS

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    from helpers import use_backend

    with use_backend(request.param) as mod:
        yield mod
