from __future__ import annotations

from pathlib import Path

import pytest

from mcpp.parser import parse_file, parse_program

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# The target/source hierarchy used throughout the tests, without specs.
NTS_SRC = """
class T {
  field source;
  pred Tok() = exists s. this->source |-> s;
  ctor T() req true ens true {}
  dtor ~T() req true ens true {}
}
class S {
  field target;
  pred Sok() = exists t. this->target |-> t;
  ctor S() req true ens true {}
  dtor ~S() req true ens true {}
}
class N : T, S {
  ctor N() req true ens true : T(), S() {}
  dtor ~N() req true ens true {}
}
main { skip }
"""


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def node():
    return parse_file(CORPUS / "node.mcpp")


@pytest.fixture(scope="session")
def nts():
    return parse_program(NTS_SRC)
