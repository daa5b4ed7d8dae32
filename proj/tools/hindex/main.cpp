#include "hindex/cli.hpp"

int main(int argc, char** argv) { return hindex::cli::main(argc, argv); }
