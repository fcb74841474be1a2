#include "cli.hpp"

int main(int argc, char** argv) { return fuzzprint::cli::run(argc, argv); }
