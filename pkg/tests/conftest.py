import pytest

from slrupdate.fixtures import snowball_world, update_world


@pytest.fixture(scope="session")
def graph():
    return snowball_world()


@pytest.fixture(scope="session")
def graph_no_doi():
    return snowball_world(no_doi_stop=True)


@pytest.fixture(scope="session")
def update_fixture():
    return update_world()


@pytest.fixture(scope="session")
def update_files(update_fixture, tmp_path_factory):
    return update_fixture.write(tmp_path_factory.mktemp("update"))


@pytest.fixture(scope="session")
def graph_files(graph, tmp_path_factory):
    return graph.write(tmp_path_factory.mktemp("graph"))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
