#include "memlab/cli.hpp"

int main(int argc, char** argv) { return memlab::run_cli(argc, argv); }
