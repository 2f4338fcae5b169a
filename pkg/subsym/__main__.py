import sys

from subsym.cli import main

sys.exit(main())
