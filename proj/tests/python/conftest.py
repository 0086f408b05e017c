# Copyright 2026 The ShapNet Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import os
import sys

# Under ctest the package comes from the build tree; drop the redirect that an
# editable install puts in front of PYTHONPATH.
if os.environ.get("SHAPNET_EXPECT_MODULE_DIR"):
  sys.meta_path[:] = [
      f for f in sys.meta_path
      if not type(f).__module__.startswith("_editable_skbc_shapnet")
  ]
