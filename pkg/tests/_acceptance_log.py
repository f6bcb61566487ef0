"""Collects one line per acceptance criterion for the terminal summary."""

RESULTS: dict[int, tuple[bool, str]] = {}
NOTES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    RESULTS[criterion] = (bool(ok), detail)


def note(text: str) -> None:
    NOTES.append(text)
