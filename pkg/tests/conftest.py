import json
from importlib import resources

import pytest
from hypothesis import strategies as st

from stsampler.cnf import Formula, normalize_clause
from stsampler.instances import gen_rand3sat


@st.composite
def formulas(draw, max_vars=8, max_clauses=12, max_width=4):
    n = draw(st.integers(1, max_vars))
    lit = st.integers(1, n).flatmap(lambda v: st.sampled_from((v, -v)))
    clauses = draw(st.lists(st.lists(lit, min_size=1, max_size=max_width), max_size=max_clauses))
    return Formula(n, tuple(normalize_clause(c) for c in clauses))


@st.composite
def formula_and_assignment(draw, **kw):
    f = draw(formulas(**kw))
    a = tuple(draw(st.lists(st.integers(0, 1), min_size=f.num_vars, max_size=f.num_vars)))
    return f, a


def random_3sat_suite(count, n_lo, n_hi, ratio=4.0, seed=0):
    out = []
    for i in range(count):
        n = n_lo + i % (n_hi - n_lo + 1)
        out.append(gen_rand3sat(n, round(ratio * n), seed * 1000 + i))
    return out


@pytest.fixture(scope="session")
def schemas():
    root = resources.files("stsampler") / "schemas"
    return {p.name[:-5]: json.loads(p.read_text()) for p in root.iterdir() if p.name.endswith(".json")}


_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed again in the summary."""

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
