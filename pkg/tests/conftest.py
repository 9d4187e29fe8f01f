import sys

import pytest
from hypothesis import HealthCheck, settings

from tempmark.features import load_lexicons
from tempmark.treebank import parse_tree

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

EXAMPLE_TREE = """
(S1 (S (NP (DT The) (NN company))
     (VP (VBD said)
       (S (NP (NNS employees))
         (VP (MD will)
          (VP (VB lose)
           (NP (PRP their) (NNS jobs))
           (SBAR-TMP (IN after)
            (S (NP (DT the) (NN sale))
             (VP (AUX is) (VP (VBN completed)))
  ))))))))
"""


@pytest.fixture
def example_tree():
    return parse_tree(EXAMPLE_TREE)


@pytest.fixture(scope="session")
def lexicons():
    return load_lexicons()


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
