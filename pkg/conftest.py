import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "ctssm.settings")
django.setup()
