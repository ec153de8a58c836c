"""Regenerate the shipped synthetic fixture under ``fixtures/synthetic``."""
from pathlib import Path

from tca.synthetic import write_fixture

if __name__ == "__main__":
    root = Path(__file__).resolve().parents[1]
    print(write_fixture(root / "fixtures" / "synthetic"))
