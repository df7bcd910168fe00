import sys

from rnft.cli import main

sys.exit(main())
