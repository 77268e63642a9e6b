import numpy as np
import pytest

from modeshape.synth import Event, ModeSpec, ScenarioSpec, generate
from modeshape.timeseries import ChannelSet, MeasurementWindow

FS = 50.0


def single_mode_window(freq=0.5, sigma=-0.3, shape=(1, 1, -1, -1), length_s=10.0, fs=FS):
    spec = ScenarioSpec((ModeSpec(freq, sigma, shape),), length_s, fs, (Event(0.0),))
    cs = generate(spec)
    return MeasurementWindow(cs, 0, length_s, 0, 0.0)


def window_from(x, fs=FS):
    x = np.atleast_2d(x)
    cs = ChannelSet([f"c{i}" for i in range(x.shape[0])], fs, x)
    return MeasurementWindow(cs, 0, x.shape[1] / fs, 0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ----------------------------------------------------------------- acceptance log

_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Use as ``with acceptance(3, "decay band") as note: ...``; ``note(text)``
    adds a measured value to the line. The line reads FAIL if the block raises.
    """
    from contextlib import contextmanager

    log = request.config.stash[_ACCEPTANCE]

    @contextmanager
    def criterion(number, title):
        details = []
        try:
            yield details.append
        except BaseException:
            log[number] = f"criterion {number} FAIL  {title}: {'; '.join(details)}"
            raise
        log[number] = f"criterion {number} PASS  {title}: {'; '.join(details)}"

    return criterion


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        terminalreporter.write_line(log[number])
