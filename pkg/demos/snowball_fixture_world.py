"""
Backward and forward snowballing on an offline citation graph
=============================================================

Nine seed studies, a small synthetic citation graph, both directions, up to
five iterations.  The run stops early once no new study can be expanded.
"""

import tempfile
from collections import Counter
from pathlib import Path

from slrupdate.fixtures import snowball_world
from slrupdate.providers import FixtureProvider
from slrupdate.snowball import SnowballRequest, run_snowballing

# Build the world.  ``snowball_world()`` returns the graph plus the seed DOIs.
fixture = snowball_world()
provider = FixtureProvider(fixture.world)
print(f"{len(fixture.seeds)} seeds, {len(fixture.world['works'])} works in the graph")

# Ask for five iterations in both directions.
request = SnowballRequest(tuple(fixture.seeds), directions=("backward", "forward"), max_iterations=5)
out_dir = Path(tempfile.mkdtemp(prefix="snowball-"))
result = run_snowballing(request, provider, out_dir=out_dir)

# New studies per iteration.
print()
print("iteration  backward  forward")
for k in range(1, result.iterations_run + 1):
    b = len(result["backward"].discovered_by_iteration.get(k, []))
    f = len(result["forward"].discovered_by_iteration.get(k, []))
    print(f"{k:>9}  {b:>8}  {f:>7}")
print(f"total      {len(result['backward'].discoveries):>8}  {len(result['forward'].discoveries):>7}")

# Why did each direction stop?
for name, res in result.directions.items():
    print(f"{name}: stopped after {res.iterations_run} iteration(s), reason {res.stop_reason}")

# The ledger records every reference met on the way, including repeats.
statuses = Counter(row.status for res in result.directions.values() for row in res.ledger)
print()
for status, n in statuses.most_common():
    print(f"{n:>4}  {status}")

print()
print("ledgers and BibTeX written to", out_dir)
for p in sorted(out_dir.iterdir()):
    print("  ", p.name, p.stat().st_size, "bytes")
