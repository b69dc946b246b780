#include "compsplit/cli.hpp"

int main(int argc, char** argv) { return compsplit::cli_dispatch(argc, argv); }
