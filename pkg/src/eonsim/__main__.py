import sys

from eonsim.cli_io import main

sys.exit(main())
