#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "rrn/synth.hpp"

namespace rrn::test {

inline std::filesystem::path data_dir() { return RRN_TEST_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Dataset synthetic(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  return generate_synthetic(default_template(), count, rng);
}

inline LandmarkSet subject(std::uint64_t seed) { return synthetic(1, seed)[0].landmarks; }

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::path(RRN_TEST_SCRATCH_DIR) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace rrn::test
