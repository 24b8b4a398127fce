# src/run_sources.py
import importlib
import os
from glob import glob

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SOURCE_PATH = "sources"


def load_source_modules():
    """Load all source-term modules dynamically, sorted by file name."""
    mods = []
    files = sorted(glob(os.path.join(BASE_DIR, SOURCE_PATH, "*.py")))
    for f in files:
        name = os.path.splitext(os.path.basename(f))[0]
        if name.startswith("_"):
            continue
        mod = importlib.import_module(f"{SOURCE_PATH}.{name}")
        if hasattr(mod, "generate_source") and hasattr(mod, "SOURCE_TAG"):
            mods.append((mod.SOURCE_TAG, mod))
    return mods


def available_tags():
    return [tag for tag, _ in load_source_modules()]


def get_source(tag):
    """Module registered under `tag` (case-insensitive), or None."""
    for name, mod in load_source_modules():
        if name.upper() == str(tag).upper():
            return mod
    return None


if __name__ == "__main__":
    for tag, mod in load_source_modules():
        print(f"{tag}: {getattr(mod, 'DESCRIPTION', '')}")
