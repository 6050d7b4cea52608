"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
    LINES.append(line)
    print(line)
    return ok
