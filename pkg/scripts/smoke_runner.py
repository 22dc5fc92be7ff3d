import io
import json
import math
from contextlib import redirect_stdout

from covconv.cli import run_cli


def fail(msg):
    print(f"\n❌ SMOKE FAILED: {msg}")
    exit(1)


def ok(msg):
    print(f"✅ {msg}")


def run(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = run_cli(argv)
    return code, buf.getvalue()


print("\n=== SMOKE RUNNER ===\n")


# equator geodesic
code, out = run(["geodesic", "--manifold", "sphere", "--x", "1.5707963,0", "--v", "0,1.5707963", "--steps", "200"])

if code != 0:
    fail(f"geodesic exited with {code}")

end = json.loads(out)["end"]

if abs(end[0] - 1.5707963) > 1e-6 or abs(end[1] - 1.5707963) > 1e-6:
    fail(f"equator geodesic ended at {end}")

ok("geodesic along the equator")


# transport keeps length
code, out = run(["transport", "--manifold", "sphere", "--points", "1.2,0;1.0,0.8;1.4,1.0", "--vector", "1,0.5"])

if code != 0:
    fail(f"transport exited with {code}")

report = json.loads(out)

if not math.isclose(report["norm_start"], report["norm_end"], rel_tol=1e-8):
    fail("transport changed the vector's length")

ok("transport preserves norms")


# decomposition
code, out = run(["decompose", "--n", "3"])

if json.loads(out)["multiplicities"] != {"0": 1, "1": 3, "2": 2, "3": 1}:
    fail("wrong multiplicities for n=3")

ok("decompose n=3")


# a shipped check
code, out = run(["check", "flat-reduction"])

if code != 0:
    fail("flat-reduction check did not pass")

ok("flat-reduction check passes")


print("\n🚀 SMOKE TEST PASSED\n")
