"""Command line entry point: ``lax-shortcuts --config cfg.json --out results/``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 when the
config is rejected (nothing is written in that case).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, validate
from .errors import LaxShortcutsError
from .scenarios import run_scenario

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID = 0, 1, 2
THREADS_ENV = "LAX_SHORTCUTS_THREADS"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def table_csv(table) -> str:
    lines = [",".join(table.columns)]
    lines += [",".join(f"{v:.12e}" for v in row) for row in np.atleast_2d(table.rows) + 0.0]
    return "\n".join(lines) + "\n"


def table_json(table) -> str:
    rows = np.atleast_2d(table.rows)
    return dumps({"columns": table.columns, "data": {c: rows[:, i] for i, c in enumerate(table.columns)}})


def render(result, formats, profile: str) -> dict:
    """All output files as ``{relative name: text}``, computed before anything touches disk."""
    files = {}
    for name, table in sorted(result.tables.items()):
        if "csv" in formats:
            files[f"{name}.csv"] = table_csv(table)
        if "json" in formats:
            files[f"{name}.json"] = table_json(table)
    files["summary.json"] = dumps(result.summary)
    files["checks.json"] = dumps([c.report(profile) for c in result.checks])
    return files


def write_outputs(out: Path, files: dict, cfg: ScenarioConfig, checks: list, profile: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, text in files.items():
        data = text.encode()
        (out / name).write_bytes(data)
        digests[name] = hashlib.sha256(data).hexdigest()
    manifest = {"scenario": cfg.scenario, "config": cfg.to_dict(), "tolerance_profile": profile,
                "files": digests, "checks": checks,
                "all_passed": all(c["passed"] for c in checks),
                "created": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    (out / "manifest.json").write_text(dumps(manifest))


def _fail(diags) -> int:
    print(json.dumps({"status": "invalid", "errors": diags}, indent=2), file=sys.stderr)
    return EXIT_INVALID


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=max(1, int(raw)))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lax-shortcuts", description="Counterdiabatic driving from integrable flows.")
    ap.add_argument("--config", required=True, help="JSON scenario config")
    ap.add_argument("--out", help="output directory (overrides 'outputs' in the config)")
    ap.add_argument("--format", choices=("csv", "json", "both"), help="table format (overrides 'formats')")
    ap.add_argument("--tolerance-profile", choices=("default", "strict"), default="default",
                    help="strict tightens accuracy bounds tenfold")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return _fail([{"path": "", "message": f"cannot read config: {exc}"}])
    diags = validate(raw)
    if diags:
        return _fail(diags)
    cfg = ScenarioConfig.from_dict(raw)
    if args.out:
        cfg.outputs = args.out
    if args.format:
        cfg.formats = ("csv", "json") if args.format == "both" else (args.format,)

    limit = _thread_limit()
    try:
        result = run_scenario(cfg.scenario, cfg.params)
    except LaxShortcutsError as exc:
        return _fail([{"path": "/params", "message": f"{type(exc).__name__}: {exc}"}])
    finally:
        if limit is not None:
            limit.restore_original_limits()

    checks = [c.report(args.tolerance_profile) for c in result.checks]
    files = render(result, cfg.formats, args.tolerance_profile)
    write_outputs(Path(cfg.outputs), files, cfg, checks, args.tolerance_profile)
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']:.3e} ({c['kind']} {c['bound']:.1e})")
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
