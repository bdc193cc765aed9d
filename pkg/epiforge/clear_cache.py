"""Remove cached calibration fits."""
import shutil
from pathlib import Path
from typing import Optional

from colorama import (
    Fore,
    Style,
)

from .cache import get_cache_path


def clear(cache_dir: Optional[Path] = None) -> bool:
    """Remove the cache directory, returns whether there was anything to remove."""
    cache_dir = Path(cache_dir) if cache_dir is not None else get_cache_path()
    entries = list(cache_dir.glob("*")) if cache_dir.exists() else []
    print(Style.BRIGHT + f"* Removing cache directory: {cache_dir}" + Style.RESET_ALL)
    shutil.rmtree(cache_dir, ignore_errors=True)
    if not entries:
        print(Fore.YELLOW + "WARNING: the cache was empty" + Style.RESET_ALL)
    return bool(entries)


def main():
    clear()


if __name__ == "__main__":
    main()
