#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "evmguard/evmguard.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
  return std::string(EVMGUARD_FIXTURE_DIR) + "/" + name;
}

inline evmguard::ContractBundle load_fixture(const std::string& name) {
  return evmguard::load_bundle(fixture_path(name));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

inline evmguard::Program assemble(const std::string& text) {
  return evmguard::decode_program(text);
}

inline evmguard::Analysis analyze_fixture(
    const std::string& name,
    const evmguard::AnalysisOptions& opts = evmguard::AnalysisOptions{}) {
  return evmguard::analyze_bundle(load_fixture(name), opts);
}

}  // namespace testsupport
