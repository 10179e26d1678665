#include "spr/cli.hpp"

int main(int argc, char** argv) { return spr::run_cli(argc, argv); }
