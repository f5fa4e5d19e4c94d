#ifndef ACE_TESTS_HELPERS_HPP
#define ACE_TESTS_HELPERS_HPP

#include "ace/errors.hpp"
#include "ace/rng.hpp"
#include "ace/types.hpp"
#include "random_images.hpp"

#include <filesystem>
#include <functional>
#include <string>

#include "doctest.h"

namespace ace::test {

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ace_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Runs `f` and returns the ErrorKind it throws; fails the test if it does not throw.
inline ErrorKind error_kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an ace::Error");
  return ErrorKind::io;
}

}  // namespace ace::test

#endif  // ACE_TESTS_HELPERS_HPP
