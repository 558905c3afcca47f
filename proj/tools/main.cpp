#include "cli.hpp"

int main(int argc, char** argv) { return semicl::cli_main(argc, argv); }
