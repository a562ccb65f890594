// Copyright 2026 The MIA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIA_IO_H_
#define MIA_IO_H_

#include <string>
#include <string_view>

namespace mia {

// Writes to "<path>.tmp" and renames over `path` once the write succeeded.
void AtomicWriteFile(const std::string& path, std::string_view contents);
std::string ReadFile(const std::string& path);
// mkdir -p; throws IoError when the path cannot be created.
void EnsureDirectory(const std::string& path);

// printf("%.17g"): round-trips every finite double.
std::string FormatDouble(double v);

}  // namespace mia

#endif  // MIA_IO_H_
