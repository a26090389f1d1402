import sys

from roi_nbv.cli import main

sys.exit(main())
