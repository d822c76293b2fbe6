import sys

from clorl.main import main

sys.exit(main())
