import sys

from sheetkit.cli import main

sys.exit(main())
