import sys

from fairproxy.cli import main

sys.exit(main())
