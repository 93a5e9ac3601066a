#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include "leo/log.hpp"

int main(int argc, char** argv) {
  if (std::getenv("LEO_LOG") == nullptr) leo::log::set_level(leo::log::Level::quiet);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
