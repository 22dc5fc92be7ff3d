import json
import sys
from typing import Any

from .config import config
from .utils import format_duration, to_jsonable


def emit_json(payload: Any, stream=None):
    """Write one JSON document (the machine-readable result) to stdout."""
    stream = stream or sys.stdout
    stream.write(json.dumps(to_jsonable(payload), indent=2, default=str))
    stream.write("\n")
    stream.flush()


def _status_line(desc: str, result: Any) -> str:
    if isinstance(result, dict) and "error" in result:
        return f"❌ {desc}: {result['error']}"
    status = result.get("status") if isinstance(result, dict) else None
    if status is None:
        return f"📋 {desc}"
    icon = "✅" if status == "pass" else "❌"
    line = f"{icon} {desc}: {status} (max error {result['max_abs_error']:.3e}, tol {result['tolerance']:.1e}"
    if "wall_time_s" in result:
        line += f", {format_duration(result['wall_time_s'])}"
    return line + ")"


def display_suite(suite_name: str, entries: list[tuple[str, Any]]) -> bool:
    """Print a summary of (description, result) pairs and save them.

    Results are report dicts (or {"error": ...} for calls that failed). The
    whole suite goes to `<export_dir>/suite_report.json`. Returns True when
    every entry passed.
    """
    print(f"\n🧪 Suite: {suite_name}")
    print("-" * 50)

    all_results = {}
    all_passed = True
    for desc, result in entries:
        print(_status_line(desc, result))
        all_results[desc] = to_jsonable(result)
        if not (isinstance(result, dict) and result.get("status") == "pass"):
            all_passed = False
    print("-" * 50)

    try:
        config.ensure_dirs()
        report_file = config.export_dir / "suite_report.json"
        with report_file.open("w", encoding="utf-8") as f:
            json.dump({"suite": suite_name, "passed": all_passed, "results": all_results}, f, indent=2,
                      default=str)
        print(f"\n✅ Suite report saved to: {report_file}")
    except OSError as e:
        print(f"Error saving suite report: {e}")

    print("=" * 77)
    return all_passed
