#include "fdapoi/cli.hpp"

int main(int argc, char** argv) { return fdapoi::run_cli(argc, argv); }
