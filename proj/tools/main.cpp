#include "biro/cli.hpp"

int main(int argc, char** argv) { return biro::run_cli(argc, argv); }
