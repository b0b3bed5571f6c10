#include <iostream>

#include "dynborrow/commands.hpp"

int main(int argc, char** argv) {
  return dynborrow::run_cli(argc, argv, std::cout, std::cerr);
}
