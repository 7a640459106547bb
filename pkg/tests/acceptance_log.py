"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

LINES: list = []


def record(cid: str, ok: bool, detail: str) -> None:
    LINES.append(f"{cid} {'PASS' if ok else 'FAIL'}: {detail}")
