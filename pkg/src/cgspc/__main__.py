import sys

from cgspc.cli import main

sys.exit(main())
