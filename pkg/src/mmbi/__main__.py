import sys

from mmbi.cli import main

sys.exit(main())
