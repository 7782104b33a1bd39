﻿