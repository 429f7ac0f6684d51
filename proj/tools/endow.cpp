#include "endow/cli.hpp"

int main(int argc, char** argv) { return endow::cli_main(argc, argv); }
