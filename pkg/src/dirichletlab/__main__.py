#!/usr/bin/env python
# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

import sys
from .main import main

sys.exit(main())
