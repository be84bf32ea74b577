#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "drape/log.hpp"

int main(int argc, char** argv) {
  drape::log::set_level(drape::log::Level::error);
  doctest::Context context(argc, argv);
  return context.run();
}
