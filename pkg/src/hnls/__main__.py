import sys

from hnls.cli import main

sys.exit(main())
