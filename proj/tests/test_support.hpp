// Copyright 2026 The vcmarkov Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "vcmarkov/corpus.hpp"
#include "vcmarkov/scheme.hpp"

namespace vcmarkov::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sample_path(const std::string& name) {
  return std::string(VCMARKOV_SAMPLES_DIR) + "/" + name;
}

inline LayoutConfig sample_layout(const std::string& name) {
  return nlohmann::json::parse(read_file(sample_path(name))).get<LayoutConfig>();
}

inline Corpus sample_corpus(const std::string& source) {
  return parse_corpus(read_file(sample_path(source + ".txt")),
                      sample_layout("layout_" + source + ".json"), builtin_scheme(source), source);
}

}  // namespace vcmarkov::testing
