#pragma once

#include <gtest/gtest.h>

#include "../common/fd_check.hpp"

namespace rrn::test {

using fd::random_tensor;

inline void expect_report(const fd::Report& report) {
  for (const auto& [name, err] : report) EXPECT_LT(err, fd::kTolerance) << name;
}

inline void check_sequential(Sequential& net, std::size_t batch, std::uint64_t seed, double reg_scale = 0.0) {
  expect_report(fd::check_sequential(net, batch, seed, reg_scale));
}

}  // namespace rrn::test
