#include "tsforge/cli.hpp"

int main(int argc, char** argv) { return tsforge::cli::run(argc, argv); }
