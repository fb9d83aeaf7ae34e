// Copyright 2026 The attrinf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Number formatting for the text tables written by the tools.

#ifndef ATTRINF_FORMAT_H_
#define ATTRINF_FORMAT_H_

#include <optional>
#include <string>

namespace attrinf {

// Shortest decimal that parses back to the same double.
std::string FormatDouble(double v);

// Fixed notation with `digits` decimals.
std::string FormatFixed(double v, int digits);

// FormatDouble, or "NA" when the value is absent.
std::string FormatOptional(const std::optional<double>& v);

inline constexpr const char* kAbsent = "NA";

}  // namespace attrinf

#endif  // ATTRINF_FORMAT_H_
