#include "amdreg/cli.hpp"

int main(int argc, char** argv) { return amdreg::run_cli(argc, argv); }
