#include "cli.hpp"

int main(int argc, char** argv) { return kprune::cli::run(argc, argv); }
