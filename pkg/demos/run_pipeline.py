"""Build a tiny dataset and run every stage through the command line entry point."""
import sys
import tempfile
from pathlib import Path

from accessory_tryon import cli, synthetic

root = Path(tempfile.mkdtemp()) / "data"
ids = synthetic.make_dataset(root, n=3, hands={0}, wrist_missing={2})
print("dataset at", root, "ids", ids)

# record 1 has only a body wrist, record 2 only the arm fallback
code = cli.main(["all", "--root", str(root), "--deterministic",
                 "--set", "max_steps=300", "--set", "resolutions=96x128,48x64"])
cli.main(["visualize", "--root", str(root)])
for d in sorted(p.name for p in root.iterdir()):
    print(f"{d:<18}", len(list((root / d).iterdir())), "files")
sys.exit(code)
