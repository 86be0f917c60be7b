#include "sympflow/cli.hpp"

int main(int argc, char** argv) { return sympflow::cli_dispatch(argc, argv); }
