#include "radialrouter/cli.hpp"

int main(int argc, char** argv) { return radialrouter::cli::run(argc, argv); }
