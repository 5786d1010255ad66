#include "cli.hpp"

int main(int argc, char** argv) { return pedwatch::cli::run(argc, argv); }
