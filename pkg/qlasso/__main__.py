# -*- coding: utf-8 -*-
"""Запуск командной строки: python -m qlasso <команда> ..."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
