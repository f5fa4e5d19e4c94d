#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "ace/log.hpp"
#include "ace/runtime.hpp"

int main(int argc, char** argv) {
  ace::tune_allocator();
  ace::log::set_level(ace::log::Level::error);
  doctest::Context context(argc, argv);
  return context.run();
}
