#include "cli.hpp"

#include <camiqa/runtime.hpp>

#include <iostream>

int main(int argc, char** argv) {
  camiqa::configure_allocator();
  std::vector<std::string> args(argv + 1, argv + argc);
  return camiqa::cli::run(args, std::cout, std::cerr);
}
