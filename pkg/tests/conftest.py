import pytest

from xnli.core import EmbeddingSpace, Label, NliExample, Vocabulary
from xnli.numkit import make_rng


@pytest.fixture
def rng():
    return make_rng(1234)


def random_space(rng, n=12, d=5, prefix="w"):
    return EmbeddingSpace(Vocabulary([f"{prefix}{i}" for i in range(n)]), rng.standard_normal((n, d)))


def random_example(rng, vocab, lp=(1, 6), lh=(1, 5)):
    p = tuple(rng.choice(vocab, size=int(rng.integers(lp[0], lp[1] + 1))))
    h = tuple(rng.choice(vocab, size=int(rng.integers(lh[0], lh[1] + 1))))
    return NliExample(p, h, Label(int(rng.integers(3))))


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def record(criterion: int, ok: bool | None, detail: str) -> None:
    """ok=None marks a skipped criterion."""
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    ACCEPTANCE.append(f"criterion {criterion:>2}: {status}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
