#include "f2f/cli.hpp"

int main(int argc, char** argv) { return f2f::run_cli(argc, argv); }
