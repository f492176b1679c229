import sys

from avsearch.cli import main


sys.exit(main())
