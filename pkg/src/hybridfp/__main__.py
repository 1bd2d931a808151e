import sys

from hybridfp.cli import main

sys.exit(main())
