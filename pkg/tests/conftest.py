import sys
from pathlib import Path

# make sibling helper modules (oracles, cases) importable from any test
sys.path.insert(0, str(Path(__file__).parent))
