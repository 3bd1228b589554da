"""Console-script entry point for the reeb_volume package.

Run with:  python -m reeb_volume COMMAND ...
        or: reeb-volume COMMAND ... (after `pip install -e .`)
"""

from .__main__ import main

if __name__ == "__main__":
    main()
