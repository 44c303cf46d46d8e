#include <iostream>

#include "plrt/cli.hpp"

int main(int argc, char** argv) { return plrt::dispatch(argc, argv, std::cout, std::cerr); }
