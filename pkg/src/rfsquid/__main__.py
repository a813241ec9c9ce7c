import sys

from rfsquid.cli import main

sys.exit(main())
