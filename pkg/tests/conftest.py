import sys
from pathlib import Path

_ROOT = Path(__file__).resolve().parent.parent
for entry in (str(_ROOT / "src"), str(_ROOT / "tests")):
    if entry not in sys.path:
        sys.path.insert(0, entry)
