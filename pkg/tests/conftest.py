import socket

import pytest

from corpusgen.minilang import bundled_programs, load_bundled


@pytest.fixture
def cards():
    return load_bundled("cards")


@pytest.fixture(params=bundled_programs())
def bundled(request):
    return load_bundled(request.param)


@pytest.fixture
def no_network(monkeypatch):
    """Fail loudly on any attempt to open a socket or resolve a name."""
    attempts = []

    def refuse(*args, **kwargs):
        attempts.append(args)
        raise RuntimeError("network access attempted")

    monkeypatch.setattr(socket, "socket", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)
    monkeypatch.setattr(socket, "getaddrinfo", refuse)
    return attempts


def pytest_terminal_summary(terminalreporter):
    from support.acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
