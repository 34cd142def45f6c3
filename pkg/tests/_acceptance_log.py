"""Collects one PASS/FAIL line per acceptance criterion."""
_RESULTS: dict[int, str] = {}


def record(number: int, ok: bool, title: str, detail: str) -> bool:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    _RESULTS[number] = line
    print(line)
    return ok


def lines() -> list[str]:
    return [_RESULTS[k] for k in sorted(_RESULTS)]
