# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

__version__ = '0.1.0'
