#include <iostream>

#include "weylqed/cli/app.hpp"

int main(int argc, char** argv) { return weylqed::cli::run_app(argc, argv, std::cout, std::cerr); }
