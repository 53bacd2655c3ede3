"""Shared record of acceptance outcomes, printed at the end of the pytest run."""
LOG: list[str] = []


def report(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    LOG.append(line)
    print(line)
