"""Access to bundled puzzle files and path-based loading."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .model import Instance, load_logic_grid, load_sudoku


def bundled_names() -> list[str]:
    out = []
    for entry in resources.files("stepelicit.data").iterdir():
        if entry.name.endswith((".sudoku", ".lgp")):
            out.append(entry.name.rsplit(".", 1)[0])
    return sorted(out)


def load(name_or_path: str) -> Instance:
    """Load a bundled puzzle by name, or any .sudoku/.lgp file by path."""
    path = Path(name_or_path)
    if not path.exists():
        data = resources.files("stepelicit.data")
        for suffix in (".sudoku", ".lgp"):
            candidate = data / f"{name_or_path}{suffix}"
            if candidate.is_file():
                text = candidate.read_text()
                if suffix == ".sudoku":
                    return load_sudoku(text, name=name_or_path)
                return load_logic_grid(text, name=name_or_path)
        raise FileNotFoundError(f"no puzzle named {name_or_path!r}")
    text = path.read_text()
    if path.suffix == ".lgp":
        return load_logic_grid(text, name=path.stem)
    return load_sudoku(text, name=path.stem)
