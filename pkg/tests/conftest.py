import pytest

from diamond_embed.graphs import BundleSpec, build_coded, build_recursive


@pytest.fixture(scope="session")
def coded():
    cache = {}

    def get(k, w):
        if (k, w) not in cache:
            cache[k, w] = build_coded(BundleSpec("diamond", k, w))
        return cache[k, w]

    return get


@pytest.fixture(scope="session")
def recursive():
    cache = {}

    def get(family, k, w):
        if (family, k, w) not in cache:
            cache[family, k, w] = build_recursive(BundleSpec(family, k, w))
        return cache[family, k, w]

    return get


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS, summary_lines

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in summary_lines():
            terminalreporter.write_line(line)
