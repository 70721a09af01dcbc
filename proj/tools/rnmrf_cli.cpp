#include "rnmrf/cli.hpp"

int main(int argc, char** argv) { return rnmrf::run_cli(argc, argv); }
