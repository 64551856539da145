#include "app.hpp"

#include <iostream>

int main(int argc, char** argv) { return tvsh::cli::cli_main(argc, argv, std::cout, std::cerr); }
