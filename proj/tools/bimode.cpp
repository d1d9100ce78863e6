#include "bimode/cli.hpp"

int main(int argc, char** argv) { return bimode::run_cli(argc, argv); }
