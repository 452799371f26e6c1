# # Sweeps, confidence intervals and the command line
#
# A sweep runs every combination of strategy, approach, lifetime, density
# and seed, then reports the mean and a Student-t 95 % interval per cell.

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

from vndnsim.cli import SweepGrid, run_sweep
from vndnsim.metrics import mean_ci95
from vndnsim.scenario import ScenarioConfig

print(mean_ci95([0.9, 1.0]))

# %%
base = ScenarioConfig(duration_s=20.0)
grid = SweepGrid(strategies=["immm", "flooding"], approaches=[3], lifetimes_ms=[4000],
                 node_counts=[60], seeds=[1, 2, 3])
out = Path(tempfile.mkdtemp())
reports, rows = run_sweep(base, grid, out)
for row in rows:
    print(row["strategy"], row["runs"], round(row["isr_mean"], 4), round(row["isr_ci95"], 4))
print((out / "aggregate.csv").read_text().splitlines()[0])

# %% [markdown]
# The same from the shell: `python3 -m vndnsim` with flags that override the
# YAML configuration.

# %%
def cli(*args):
    res = subprocess.run([sys.executable, "-m", "vndnsim", *args], capture_output=True, text=True)
    print(res.returncode, res.stdout.strip() or res.stderr.strip())


cli("--replay-figures")
cfg_file = out / "short.yaml"
cfg_file.write_text("duration_s: 5.0\nmobility:\n  node_count: 60\n")
cli("--config", str(cfg_file), "--out", str(out / "single"))
cli("--config", str(cfg_file), "--strategy", "immm,flooding", "--seeds", "1..2", "--out", str(out / "sweep"))
cli("--config", str(cfg_file), "--seeds", "3..1")
