"""Shared helpers for the experiment scripts."""
from pathlib import Path

from lax_shortcuts.cli import table_csv


def save_tables(result, out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    for name, table in result.tables.items():
        (path / f"{name}.csv").write_text(table_csv(table))
    return path


def print_checks(result) -> bool:
    for c in result.checks:
        r = c.report("default")
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}: {r['value']:.3e}")
    return all(c.passed("default") for c in result.checks)
